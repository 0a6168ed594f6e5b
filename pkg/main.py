# main.py
# RoBus Layout Explorer - Streamlit Entry Point
# streamlit run main.py

import streamlit as st
from dotenv import load_dotenv

load_dotenv()

from components.sidebar import create_sidebar
from components.styles import apply_custom_styles
from config.app_config import AppConfig
from pages.dataset_analytics import dataset_analytics_page
from pages.home import home_page
from pages.road_network import road_network_page
from pages.tile_explorer import tile_explorer_page


def main():
    """Configure the page, draw the sidebar and route to the selected page"""
    st.set_page_config(
        page_title=AppConfig.APP_TITLE,
        page_icon=AppConfig.APP_ICON,
        layout="wide",
        initial_sidebar_state="expanded",
    )
    apply_custom_styles()

    page, out_dir = create_sidebar()

    if page == "🏠 Home":
        home_page(out_dir)
    elif page == "🗺️ Tile Explorer":
        tile_explorer_page(out_dir)
    elif page == "🛣️ Road Network":
        road_network_page(out_dir)
    elif page == "🔍 Dataset Analytics":
        dataset_analytics_page(out_dir)


if __name__ == "__main__":
    main()
