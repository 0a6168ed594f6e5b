# pages/tile_explorer.py
# Tile Explorer Page
# Per-channel heatmaps of one tile next to its labels and statistics

import json
from pathlib import Path

import pandas as pd
import streamlit as st

from components.charts import channel_heatmap
from components.styles import create_label_chips, create_main_header
from utils.errors import FormatError
from utils.export import read_raster, read_tile
from utils.pipeline_runner import LABELS_DIR, REGION, TILES_DIR


def tile_explorer_page(out_dir):
    create_main_header()
    st.header("🗺️ Tile Explorer")

    tiles_dir = Path(out_dir) / TILES_DIR
    tile_paths = sorted(tiles_dir.glob("tile_*.rbt")) if tiles_dir.is_dir() else []
    choices = ["Whole region"] + [p.stem for p in tile_paths]
    selected = st.sidebar.selectbox("Raster", choices)

    try:
        if selected == "Whole region":
            region_path = Path(out_dir) / REGION
            if not region_path.is_file():
                st.warning("No region raster yet. Run the rasterize stage first.")
                return
            raster = read_raster(region_path.read_bytes())
            sidecar = None
        else:
            raster = read_tile((tiles_dir / f"{selected}.rbt").read_bytes())
            sidecar_path = Path(out_dir) / LABELS_DIR / f"{selected}.json"
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8")) if sidecar_path.is_file() else None
    except FormatError as e:
        st.error(f"Unreadable raster ({e.field}): {e}")
        return

    col1, col2, col3 = st.columns(3)
    col1.metric("Size", f"{raster.width}×{raster.height} px")
    col2.metric("Resolution", f"{raster.resolution:g} m/px")
    col3.metric("Origin", f"{raster.transform.c:.0f}, {raster.transform.f:.0f}")
    if getattr(raster, "padded", False):
        st.info("This tile was zero-padded because the region is smaller than one tile.")

    if sidecar:
        st.subheader("🏷️ Labels")
        st.markdown(create_label_chips(sidecar["labels"]), unsafe_allow_html=True)
        st.markdown(f"> {sidecar['text']}")
        stats = pd.DataFrame([{"Statistic": k, "Value": v} for k, v in sidecar["stats"].items()])
        st.dataframe(stats, use_container_width=True)

    st.subheader("🎨 Channels")
    channels = st.multiselect("Channels", list(raster.channel_names), default=list(raster.channel_names[:2]))
    for left, right in zip(channels[::2], channels[1::2] + [None]):
        cols = st.columns(2)
        with cols[0]:
            st.plotly_chart(channel_heatmap(raster, left), use_container_width=True)
        if right is not None:
            with cols[1]:
                st.plotly_chart(channel_heatmap(raster, right), use_container_width=True)
