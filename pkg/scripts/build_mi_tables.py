import sys
from pathlib import Path

# Add parent directory to path so we can import app
sys.path.insert(0, str(Path(__file__).parent.parent))

import logging

from app.config import settings
from app.phy.mutual_information import mi_table_set


def build_tables(cache_dir: str):
    """Build (or refresh) the QPSK/16QAM/64QAM MI tables in the cache directory."""
    tables = mi_table_set(
        orders=(2, 4, 6),
        cache_dir=cache_dir,
        lo_db=settings.mi_grid_lo_db,
        hi_db=settings.mi_grid_hi_db,
        step_db=settings.mi_grid_step_db,
        quadrature_order=settings.mi_quadrature_order,
    )
    for order, table in sorted(tables.items()):
        print(f"{table.constellation.name}: {len(table)} points, MI at top of grid {table.mi_bits[-1]:.4f} bits")


if __name__ == "__main__":
    logging.basicConfig(level=settings.log_level.upper())
    build_tables(sys.argv[1] if len(sys.argv) > 1 else (settings.mi_cache_dir or "mi_cache"))
