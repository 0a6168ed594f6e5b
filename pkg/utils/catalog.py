# utils/catalog.py
# Artifact Catalog Module
# Loads a pipeline output directory into SQLite for dataset analytics

import json
import logging
import sqlite3
from pathlib import Path

import pandas as pd

from utils.export import read_geojson_blocks, read_geojson_buildings
from utils.geo_core import polygon_area

logger = logging.getLogger(__name__)

CATALOG_TABLES = ("tiles", "labels", "buildings", "blocks", "stages")


class ArtifactCatalog:
    """
    Artifact Catalog Class - SQLite view over one pipeline run
    Tables: tiles, labels, buildings, blocks, stages
    """

    def __init__(self, db_path=":memory:"):
        """Open the catalog database (in memory unless a path is given)"""
        self.db_path = db_path
        if db_path != ":memory:":
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(db_path, check_same_thread=False)
        self.init_database()

    def get_connection(self):
        return self._conn

    def close(self):
        self._conn.close()

    def init_database(self):
        """Create catalog tables"""
        cursor = self._conn.cursor()

        # Tiles - one row per labelled tile with its statistics
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS tiles (
                tile_id TEXT PRIMARY KEY,
                col INTEGER,
                row INTEGER,
                road_len_km REAL,
                entropy_nats REAL,
                built_fraction REAL,
                mean_height_m REAL,
                traffic_convenience REAL
            )
        """)

        # Labels - categorical attributes and the rendered text
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS labels (
                tile_id TEXT PRIMARY KEY,
                road_density TEXT,
                orientation TEXT,
                building_density TEXT,
                building_height TEXT,
                text TEXT,
                FOREIGN KEY (tile_id) REFERENCES tiles(tile_id)
            )
        """)

        # Buildings - enriched footprints and their block
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS buildings (
                id TEXT PRIMARY KEY,
                height REAL,
                height_source TEXT,
                footprint_area_m2 REAL,
                block_id INTEGER
            )
        """)

        # Blocks - road-bounded polygons
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS blocks (
                block_id INTEGER PRIMARY KEY,
                area_m2 REAL,
                building_count INTEGER,
                valid INTEGER
            )
        """)

        # Stages - manifest summary per stage
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS stages (
                stage TEXT PRIMARY KEY,
                status TEXT,
                config_hash TEXT,
                output_count INTEGER,
                counts TEXT
            )
        """)
        self._conn.commit()

    def clear(self):
        cursor = self._conn.cursor()
        for table in CATALOG_TABLES:
            cursor.execute(f"DELETE FROM {table}")
        self._conn.commit()

    def load_run(self, out_dir):
        """
        Replace the catalog contents with the artifacts found under out_dir.
        Missing stages simply leave their tables empty.
        """
        out = Path(out_dir)
        self.clear()
        cursor = self._conn.cursor()

        for sidecar_path in sorted((out / "labels").glob("tile_*.json")):
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
            col, row = sidecar["tile_id"]
            tile_key = f"{col}_{row}"
            stats, labels = sidecar["stats"], sidecar["labels"]
            cursor.execute(
                "INSERT INTO tiles VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (tile_key, col, row, stats["road_len_km"], stats["entropy_nats"], stats["built_fraction"],
                 stats["mean_height_m"], stats.get("traffic_convenience")),
            )
            cursor.execute(
                "INSERT INTO labels VALUES (?, ?, ?, ?, ?, ?)",
                (tile_key, labels["road_density"], labels["orientation"], labels["building_density"],
                 labels["building_height"], sidecar["text"]),
            )

        block_of = {}
        blocks_path = out / "heights" / "blocks.geojson"
        if blocks_path.is_file():
            for block in read_geojson_blocks(blocks_path.read_bytes()):
                for building_id in block.buildings:
                    block_of[building_id] = block.block_id
                cursor.execute(
                    "INSERT INTO blocks VALUES (?, ?, ?, ?)",
                    (block.block_id, polygon_area(block.boundary), len(block.buildings), int(block.valid)),
                )

        buildings_path = out / "heights" / "buildings.geojson"
        if buildings_path.is_file():
            for b in read_geojson_buildings(buildings_path.read_bytes()):
                cursor.execute(
                    "INSERT INTO buildings VALUES (?, ?, ?, ?, ?)",
                    (b.id, b.height, b.height_source.value if b.height_source else None,
                     polygon_area(b.footprint), block_of.get(b.id)),
                )

        for manifest_path in sorted((out / "manifests").glob("*.json")):
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            cursor.execute(
                "INSERT INTO stages VALUES (?, ?, ?, ?, ?)",
                (manifest["stage"], manifest["status"], manifest["config_hash"], len(manifest["outputs"]),
                 json.dumps(manifest["counts"], sort_keys=True)),
            )

        self._conn.commit()
        logger.info("catalog loaded", extra={"context": {"out_dir": str(out), **self.get_table_stats()}})
        return self.get_table_stats()

    def execute_query(self, query, params=None):
        """
        Execute a SQL query and return results as DataFrame
        Returns an empty DataFrame when the query fails
        """
        try:
            if params:
                return pd.read_sql_query(query, self._conn, params=params)
            return pd.read_sql_query(query, self._conn)
        except Exception as e:
            logger.error("catalog query failed", extra={"context": {"error": str(e)}})
            return pd.DataFrame()

    def get_table_stats(self):
        """Row count per catalog table"""
        stats = {}
        for table in CATALOG_TABLES:
            result = pd.read_sql_query(f"SELECT COUNT(*) as count FROM {table}", self._conn)
            stats[table] = int(result.iloc[0]["count"])
        return stats
