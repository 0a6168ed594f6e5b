# utils/catalog_queries.py
# Catalog Queries Module
# Canned dataset statistics over the artifact catalog, grouped by topic


class CatalogQueries:
    """
    Catalog Queries Class
    Every query returns (DataFrame, title, sql) like the analytics page expects
    """

    def __init__(self, catalog):
        self.db = catalog

    # ==========================================================================
    # TILE QUERIES
    # ==========================================================================

    def tile_overview(self):
        """Tile count, total road length and covered area"""
        query = """
        SELECT
            COUNT(*) as 'Tiles',
            ROUND(SUM(road_len_km), 2) as 'Road Length (km)',
            ROUND(MAX(road_len_km), 2) as 'Max Road Length (km)',
            ROUND(AVG(road_len_km), 2) as 'Mean Road Length (km)',
            ROUND(COUNT(*) * 1.6384, 2) as 'Covered Area (km2)'
        FROM tiles
        """
        return self._execute_query(query, "Tile Overview")

    def road_length_per_tile(self):
        query = """
        SELECT
            tile_id as 'Tile',
            ROUND(road_len_km, 3) as 'Road Length (km)',
            ROUND(entropy_nats, 4) as 'Orientation Entropy',
            ROUND(traffic_convenience, 4) as 'Traffic Convenience'
        FROM tiles
        ORDER BY row, col
        """
        return self._execute_query(query, "Road Statistics per Tile")

    # ==========================================================================
    # LABEL QUERIES
    # ==========================================================================

    def label_distribution(self, column):
        """Tiles per value of one label column"""
        if column not in ("road_density", "orientation", "building_density", "building_height"):
            raise ValueError(f"unknown label column {column!r}")
        query = f"""
        SELECT
            {column} as 'Label',
            COUNT(*) as 'Tiles'
        FROM labels
        GROUP BY {column}
        ORDER BY COUNT(*) DESC, {column}
        """
        return self._execute_query(query, f"Distribution of {column.replace('_', ' ').title()}")

    def label_texts(self):
        query = """
        SELECT
            tile_id as 'Tile',
            text as 'Description'
        FROM labels
        ORDER BY tile_id
        """
        return self._execute_query(query, "Descriptive Texts")

    # ==========================================================================
    # BUILDING AND BLOCK QUERIES
    # ==========================================================================

    def height_sources(self):
        """How each building got its height"""
        query = """
        SELECT
            height_source as 'Height Source',
            COUNT(*) as 'Buildings',
            ROUND(AVG(height), 2) as 'Mean Height (m)'
        FROM buildings
        GROUP BY height_source
        ORDER BY height_source
        """
        return self._execute_query(query, "Building Height Sources")

    def buildings_per_block(self):
        query = """
        SELECT
            b.block_id as 'Block',
            ROUND(b.area_m2, 1) as 'Area (m2)',
            b.building_count as 'Buildings',
            ROUND(COALESCE(SUM(bd.footprint_area_m2), 0) / b.area_m2, 4) as 'Footprint Density',
            ROUND(AVG(bd.height), 2) as 'Mean Height (m)'
        FROM blocks b
        LEFT JOIN buildings bd ON bd.block_id = b.block_id
        GROUP BY b.block_id
        ORDER BY b.block_id
        """
        return self._execute_query(query, "Buildings per Block")

    def unbounded_buildings(self):
        query = """
        SELECT
            id as 'Building',
            ROUND(height, 2) as 'Height (m)',
            height_source as 'Height Source'
        FROM buildings
        WHERE block_id IS NULL
        ORDER BY id
        """
        return self._execute_query(query, "Buildings Outside Every Block")

    # ==========================================================================
    # RUN QUERIES
    # ==========================================================================

    def stage_status(self):
        query = """
        SELECT
            stage as 'Stage',
            status as 'Status',
            output_count as 'Outputs',
            substr(config_hash, 1, 12) as 'Config Hash'
        FROM stages
        ORDER BY stage
        """
        return self._execute_query(query, "Pipeline Stages")

    def get_queries_by_topic(self, topic):
        """Queries filtered by topic"""
        if topic == "Tiles":
            return {
                "Tile Overview": self.tile_overview,
                "Road Statistics per Tile": self.road_length_per_tile,
            }
        elif topic == "Labels":
            return {
                "Road Density Labels": lambda: self.label_distribution("road_density"),
                "Orientation Labels": lambda: self.label_distribution("orientation"),
                "Building Density Labels": lambda: self.label_distribution("building_density"),
                "Building Height Labels": lambda: self.label_distribution("building_height"),
                "Descriptive Texts": self.label_texts,
            }
        elif topic == "Buildings":
            return {
                "Building Height Sources": self.height_sources,
                "Buildings per Block": self.buildings_per_block,
                "Buildings Outside Every Block": self.unbounded_buildings,
            }
        elif topic == "Run":
            return {"Pipeline Stages": self.stage_status}
        else:
            return self.get_all_queries()

    def get_all_queries(self):
        all_queries = {}
        for topic in ("Tiles", "Labels", "Buildings", "Run"):
            all_queries.update(self.get_queries_by_topic(topic))
        return all_queries

    def _execute_query(self, query, title):
        """Execute SQL query and return results with title"""
        df = self.db.execute_query(query)
        return df, title, query
