# components/styles.py
# Custom CSS Styling Module
# Header, cards and chart layout shared by the RoBus explorer pages

import streamlit as st

from config.app_config import AppConfig


def apply_custom_styles():
    """Inject the dashboard CSS once per rerun"""
    st.markdown(f"""
    <style>
        .main-header {{
            background: {AppConfig.BACKGROUND_GRADIENT};
            padding: 20px;
            border-radius: 15px;
            text-align: center;
            margin-bottom: 20px;
            box-shadow: 0 4px 6px rgba(0, 0, 0, 0.1);
        }}

        .main-header h1 {{
            color: white;
            margin: 0;
            font-weight: 700;
        }}

        .main-header h3 {{
            color: white;
            margin: 0;
            font-weight: 300;
            opacity: 0.9;
        }}

        .stat-card {{
            background: linear-gradient(135deg, #ffffff 0%, #f4f7f9 100%);
            padding: 18px;
            border-radius: 12px;
            box-shadow: 0 4px 12px rgba(0,0,0,0.08);
            margin: 10px 0;
            border-left: 4px solid {AppConfig.PRIMARY_COLOR};
        }}

        .metric-container {{
            background: linear-gradient(135deg, {AppConfig.PRIMARY_COLOR} 0%, #1B998B 100%);
            padding: 15px;
            border-radius: 10px;
            color: white;
            margin: 5px;
            text-align: center;
        }}

        .metric-container h3 {{
            margin: 0;
            font-size: 1.5em;
            font-weight: 600;
        }}

        .metric-container p {{
            margin: 5px 0 0 0;
            font-size: 0.9em;
            opacity: 0.9;
        }}

        .sidebar-header {{
            background: {AppConfig.BACKGROUND_GRADIENT};
            padding: 18px;
            border-radius: 10px;
            text-align: center;
            margin-bottom: 16px;
            color: white;
        }}

        .label-chip {{
            display: inline-block;
            padding: 3px 10px;
            margin: 2px;
            border-radius: 12px;
            background: {AppConfig.SECONDARY_COLOR};
            color: white;
            font-size: 0.85em;
        }}

        .stButton > button {{
            background: linear-gradient(135deg, {AppConfig.PRIMARY_COLOR} 0%, {AppConfig.SECONDARY_COLOR} 100%);
            color: white;
            border: none;
            border-radius: 8px;
            font-weight: 600;
        }}
    </style>
    """, unsafe_allow_html=True)


def create_main_header():
    st.markdown(f"""
    <div class="main-header">
        <h1>{AppConfig.APP_TITLE}</h1>
        <h3>{AppConfig.APP_DESCRIPTION}</h3>
    </div>
    """, unsafe_allow_html=True)


def create_metric_card(title, value, delta=None):
    """HTML for one metric tile; delta is shown underneath when given"""
    delta_html = f'<p style="margin: 5px 0 0 0;">{delta}</p>' if delta else ""
    return f"""
    <div class="metric-container">
        <h3>{value}</h3>
        <p>{title}</p>
        {delta_html}
    </div>
    """


def create_stat_card(content):
    return f'<div class="stat-card">{content}</div>'


def create_label_chips(labels):
    """One chip per categorical tile label"""
    return "".join(f'<span class="label-chip">{value}</span>' for value in labels.values())


def display_metric_cards(metrics_data):
    """Render (title, value, delta) triples side by side"""
    cols = st.columns(len(metrics_data))
    for col, (title, value, delta) in zip(cols, metrics_data):
        with col:
            st.markdown(create_metric_card(title, value, delta), unsafe_allow_html=True)


def apply_chart_styling():
    """Plotly layout defaults shared by every chart"""
    return {
        "plot_bgcolor": "rgba(0,0,0,0)",
        "paper_bgcolor": "rgba(0,0,0,0)",
        "font": {"color": "#2c3e50", "family": "Arial, sans-serif"},
        "colorway": [AppConfig.PRIMARY_COLOR, AppConfig.SECONDARY_COLOR, AppConfig.ACCENT_COLOR,
                     "#1B998B", "#ffc107", "#6c757d"],
        "height": AppConfig.CHART_HEIGHT,
        "margin": {"l": 40, "r": 20, "t": 50, "b": 40},
    }
