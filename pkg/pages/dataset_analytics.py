# pages/dataset_analytics.py
# Dataset Analytics Page
# Canned SQL statistics over the artifact catalog, with charts and export

import numpy as np
import plotly.express as px
import streamlit as st

from components.charts import label_bar_chart
from components.styles import apply_chart_styling, create_main_header
from utils.catalog import ArtifactCatalog
from utils.catalog_queries import CatalogQueries

TOPICS = ["Tiles", "Labels", "Buildings", "Run", "All Queries"]


@st.cache_resource
def get_catalog(out_dir):
    catalog = ArtifactCatalog()
    catalog.load_run(out_dir)
    return catalog


def dataset_analytics_page(out_dir):
    """Dataset Analytics Page - pick a topic, run a query, chart and export the result"""
    create_main_header()
    st.header("🔍 Dataset Analytics")

    catalog = get_catalog(out_dir)
    if st.sidebar.button("🔄 Reload catalog"):
        catalog.load_run(out_dir)
    queries = CatalogQueries(catalog)

    topic = st.sidebar.selectbox("Topic", TOPICS)
    available = queries.get_queries_by_topic(topic)
    selected = st.sidebar.selectbox("Query", list(available.keys()))

    if st.sidebar.button("🚀 Execute Query", type="primary"):
        execute_selected_query(available, selected)
    else:
        stats = catalog.get_table_stats()
        st.markdown("Catalog rows per table:")
        st.dataframe({"Table": list(stats), "Rows": list(stats.values())}, use_container_width=True)


def execute_selected_query(available, selected):
    with st.spinner(f"Executing {selected}..."):
        df, title, sql = available[selected]()

    st.subheader(f"📊 {title}")
    with st.expander("👨‍💻 View SQL Code", expanded=False):
        st.code(sql, language="sql")

    if df.empty:
        st.warning("⚠️ No rows. The catalog may not hold artifacts from the stage this query reads.")
        return

    st.success(f"✅ {len(df)} rows")
    st.dataframe(df, use_container_width=True)
    create_query_visualization(df, title)
    create_export_options(df, title)


def create_query_visualization(df, title):
    if list(df.columns) == ["Label", "Tiles"]:
        st.plotly_chart(label_bar_chart(df, title=title), use_container_width=True)
        return

    numeric_cols = df.select_dtypes(include=[np.number]).columns.tolist()
    if not numeric_cols or len(df) < 2:
        return
    col1, col2 = st.columns(2)
    with col1:
        x_axis = st.selectbox("X-Axis", df.columns.tolist())
    with col2:
        y_axis = st.selectbox("Y-Axis (Numeric)", numeric_cols)
    fig = px.bar(df, x=x_axis, y=y_axis, title=title)
    fig.update_layout(**apply_chart_styling())
    st.plotly_chart(fig, use_container_width=True)


def create_export_options(df, title):
    st.markdown("### 💾 Export Results")
    col1, col2 = st.columns(2)
    stem = title.replace(" ", "_")
    with col1:
        st.download_button("📄 Download CSV", data=df.to_csv(index=False), file_name=f"{stem}.csv", mime="text/csv")
    with col2:
        st.download_button("📋 Download JSON", data=df.to_json(orient="records", indent=2),
                           file_name=f"{stem}.json", mime="application/json")
