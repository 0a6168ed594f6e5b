# pages/home.py
# Home Page Implementation
# Run overview: stage manifests, graph statistics and label texts

import json
from pathlib import Path

import pandas as pd
import streamlit as st

from components.styles import create_main_header, create_stat_card, display_metric_cards
from utils.catalog import ArtifactCatalog
from utils.catalog_queries import CatalogQueries
from utils.pipeline_runner import GRAPH_STATS, STAGES


def load_manifests(out_dir):
    """Manifest dicts keyed by stage, in pipeline order"""
    manifests = {}
    for stage in STAGES:
        path = Path(out_dir) / "manifests" / f"{stage}.json"
        if path.is_file():
            manifests[stage] = json.loads(path.read_text(encoding="utf-8"))
    return manifests


def manifest_table(manifests):
    rows = []
    for stage, manifest in manifests.items():
        rows.append({
            "Stage": stage,
            "Status": manifest["status"],
            "Outputs": len(manifest["outputs"]),
            "Counts": ", ".join(f"{k}={v}" for k, v in manifest["counts"].items()),
            "Error": manifest.get("error", ""),
        })
    return pd.DataFrame(rows, columns=["Stage", "Status", "Outputs", "Counts", "Error"])


def home_page(out_dir):
    """Home Page - what the pipeline produced in out_dir"""
    create_main_header()

    st.header("🎯 Project Overview")
    col1, col2 = st.columns([2, 1])
    with col1:
        st.markdown("""
        The pipeline turns a geographic feature collection into a multimodal urban layout dataset:

        - **Ingest** - classify features into RoadP, RoadS, Water, Green and Building
        - **Rasterize** - six-channel 5 m/px canvas cut into 256 px tiles with 20% overlap
        - **Graph** - thinned road mask to a simplified planar road graph
        - **Blocks** - geometric minimal cycles become city blocks
        - **Heights** - raster sampling, neighbour fill, 24 m default
        - **Label** - per-tile statistics, categories and an "OSM, ..." description
        - **Export** - OpenDRIVE road skeleton
        """)
    with col2:
        st.markdown(create_stat_card("""
        <h4>▶️ Run it</h4>
        <p><code>python cli.py pipeline --out output</code></p>
        <p><code>streamlit run main.py</code></p>
        """), unsafe_allow_html=True)

    st.markdown("---")
    st.header("📈 Run Overview")

    manifests = load_manifests(out_dir)
    if not manifests:
        st.warning(f"No manifests found under {out_dir}. Run the pipeline first.")
        return

    failed = [s for s, m in manifests.items() if m["status"] != "ok"]
    stats_path = Path(out_dir) / GRAPH_STATS
    graph_stats = json.loads(stats_path.read_text(encoding="utf-8")) if stats_path.is_file() else {}
    entropy = graph_stats.get("orientation_entropy")
    convenience = graph_stats.get("traffic_convenience")

    display_metric_cards([
        ("Stages Run", len(manifests), f"{len(failed)} failed" if failed else "all ok"),
        ("Road Length", f"{graph_stats.get('total_length_m', 0) / 1000:.2f} km", None),
        ("Orientation Entropy", f"{entropy:.3f}" if entropy is not None else "n/a", "nats"),
        ("Traffic Convenience", f"{convenience:.3f}" if convenience is not None else "n/a", None),
    ])

    st.subheader("🧾 Stage Manifests")
    st.dataframe(manifest_table(manifests), use_container_width=True)
    for stage in failed:
        st.error(f"Stage {stage} failed: {manifests[stage].get('error', 'unknown error')}")

    try:
        catalog = ArtifactCatalog()
        catalog.load_run(out_dir)
        df, title, _ = CatalogQueries(catalog).label_texts()
        if not df.empty:
            st.subheader(f"📝 {title}")
            st.dataframe(df, use_container_width=True)
        catalog.close()
    except Exception as e:
        st.warning(f"Label texts unavailable: {e}")
