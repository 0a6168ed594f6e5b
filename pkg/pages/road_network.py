# pages/road_network.py
# Road Network Page
# The extracted road graph, its bearing rose and urban metrics

from pathlib import Path

import streamlit as st

from components.charts import bearing_rose, height_histogram, road_graph_figure
from components.styles import create_main_header, display_metric_cards
from config.app_config import PipelineConfig
from utils.errors import FormatError, RobusError
from utils.export import read_geojson_buildings, read_graph_json
from utils.metrics import orientation_entropy, traffic_convenience
from utils.pipeline_runner import BUILDINGS, GRAPH, XODR


def road_network_page(out_dir):
    create_main_header()
    st.header("🛣️ Road Network")

    graph_path = Path(out_dir) / GRAPH
    if not graph_path.is_file():
        st.warning("No road graph yet. Run the graph stage first.")
        return
    try:
        graph = read_graph_json(graph_path.read_bytes())
    except FormatError as e:
        st.error(f"Unreadable road graph ({e.field}): {e}")
        return

    defaults = PipelineConfig()
    min_dist = st.sidebar.slider("Convenience min distance (m)", 50, 1000, int(defaults.convenience_min_dist_m), 50)
    bins = st.sidebar.select_slider("Bearing bins", options=[12, 18, 36, 72], value=defaults.entropy_bins)

    try:
        entropy = f"{orientation_entropy(graph, bins):.3f}"
    except RobusError:
        entropy = "n/a"
    try:
        convenience = f"{traffic_convenience(graph, min_dist):.3f}"
    except RobusError:
        convenience = "n/a"

    display_metric_cards([
        ("Nodes", graph.node_count, None),
        ("Edges", graph.edge_count, None),
        ("Orientation Entropy", entropy, "nats"),
        ("Traffic Convenience", convenience, f"pairs > {min_dist} m"),
    ])

    col1, col2 = st.columns([3, 2])
    with col1:
        st.plotly_chart(road_graph_figure(graph), use_container_width=True)
    with col2:
        if graph.edge_count:
            st.plotly_chart(bearing_rose(graph, bins), use_container_width=True)

    buildings_path = Path(out_dir) / BUILDINGS
    if buildings_path.is_file():
        st.subheader("🏢 Buildings")
        buildings = read_geojson_buildings(buildings_path.read_bytes())
        st.plotly_chart(height_histogram(buildings), use_container_width=True)

    xodr_path = Path(out_dir) / XODR
    if xodr_path.is_file():
        st.download_button("📥 Download OpenDRIVE", data=xodr_path.read_bytes(), file_name="road.xodr",
                           mime="application/xml")
