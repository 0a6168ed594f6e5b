# components/charts.py
# Plotly Figure Builders
# Channel heatmaps, road graph plots, bearing roses and label bars;
# pure functions so pages and tests can share them

import numpy as np
import plotly.express as px
import plotly.graph_objects as go

from components.styles import apply_chart_styling
from config.app_config import AppConfig
from utils.metrics import bearing_histogram
from utils.osm_ingest import FeatureClass

ROAD_COLORS = {FeatureClass.ROAD_P: AppConfig.ACCENT_COLOR, FeatureClass.ROAD_S: AppConfig.PRIMARY_COLOR}


def channel_heatmap(raster, channel):
    """Heatmap of one raster plane; row 0 is north so the y axis is reversed"""
    index = raster.channel_names.index(channel) if isinstance(channel, str) else int(channel)
    name = raster.channel_names[index]
    scale = AppConfig.CHANNEL_COLORSCALES[index % len(AppConfig.CHANNEL_COLORSCALES)]
    fig = px.imshow(raster.data[index], color_continuous_scale=scale, origin="upper",
                    labels={"color": name}, title=f"{name} ({raster.width}×{raster.height} px)")
    fig.update_layout(**apply_chart_styling())
    return fig


def road_graph_figure(g, title="Road Graph"):
    """One trace per road class plus a node marker trace"""
    fig = go.Figure()
    for road_class, color in ROAD_COLORS.items():
        xs, ys = [], []
        for _, _, cls, geometry in g.edges():
            if cls is road_class:
                coords = geometry.coords()
                xs.extend(coords[:, 0].tolist() + [None])
                ys.extend(coords[:, 1].tolist() + [None])
        if xs:
            fig.add_trace(go.Scatter(x=xs, y=ys, mode="lines", name=road_class.value,
                                     line={"color": color, "width": 2}))

    points = g.nodes()
    if points:
        fig.add_trace(go.Scatter(
            x=[p.x for p in points.values()], y=[p.y for p in points.values()],
            mode="markers", name="Nodes", text=[str(n) for n in points],
            marker={"size": 5, "color": "#2c3e50"},
        ))
    fig.update_layout(title=title, **apply_chart_styling())
    fig.update_yaxes(scaleanchor="x", scaleratio=1)
    return fig


def bearing_rose(g, bins=36):
    """Polar bar chart of the length-weighted street bearing histogram"""
    hist = bearing_histogram(g, bins)
    total = hist.sum()
    share = hist / total if total > 0 else hist
    width = 360.0 / bins
    fig = go.Figure(go.Barpolar(r=share, theta=np.arange(bins) * width, width=[width] * bins,
                                marker_color=AppConfig.PRIMARY_COLOR, name="Bearing share"))
    fig.update_layout(title="Street Bearings", **apply_chart_styling())
    fig.update_polars(angularaxis={"direction": "clockwise", "rotation": 90})
    return fig


def label_bar_chart(df, label_column="Label", value_column="Tiles", title="Label Distribution"):
    fig = px.bar(df, x=label_column, y=value_column, color=label_column, title=title)
    fig.update_layout(showlegend=False, **apply_chart_styling())
    return fig


def height_histogram(buildings, nbins=20):
    """Histogram of building heights colored by where each height came from"""
    heights = [b.height for b in buildings if b.height is not None]
    sources = [b.height_source.value if b.height_source else "Unknown" for b in buildings if b.height is not None]
    fig = px.histogram(x=heights, color=sources, nbins=nbins, title="Building Heights",
                       labels={"x": "Height (m)", "color": "Source"})
    fig.update_layout(**apply_chart_styling())
    return fig
