# components/sidebar.py
# Sidebar Navigation Component
# Page selector, output directory picker and catalog quick stats

import streamlit as st

from config.app_config import AppConfig

PAGES = ["🏠 Home", "🗺️ Tile Explorer", "🛣️ Road Network", "🔍 Dataset Analytics"]


def create_sidebar():
    """
    Create the navigation sidebar
    Returns (selected page, output directory)
    """
    st.sidebar.markdown("""
    <div class="sidebar-header">
        <h2 style='color: white; margin: 0;'>🏙️ Navigation</h2>
        <p style='color: white; margin: 0; opacity: 0.9;'>Urban Layout Explorer</p>
    </div>
    """, unsafe_allow_html=True)

    page = st.sidebar.selectbox("Choose Page", PAGES, index=0)
    out_dir = st.sidebar.text_input("Pipeline output directory", value=AppConfig.OUTPUT_DIR)

    st.sidebar.markdown("---")
    st.sidebar.markdown("### 📊 Quick Stats")
    try:
        from utils.catalog import ArtifactCatalog
        catalog = ArtifactCatalog()
        stats = catalog.load_run(out_dir)
        st.sidebar.metric("Tiles", stats.get("tiles", 0))
        st.sidebar.metric("Buildings", stats.get("buildings", 0))
        st.sidebar.metric("Blocks", stats.get("blocks", 0))
        catalog.close()
    except Exception:
        st.sidebar.warning("Stats unavailable for this directory")

    st.sidebar.markdown("---")
    st.sidebar.markdown("""
    ### 💡 Tips
    - Run `python cli.py pipeline --out <dir>` first
    - Every stage writes a manifest under `manifests/`
    - Tiles are 256 px at 5 m/px with 204 px stride
    """)
    return page, out_dir
