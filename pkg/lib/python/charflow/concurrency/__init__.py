from .pool import chunk_rows, map_row_chunks, parallel_map

__all__ = [
    "chunk_rows",
    "map_row_chunks",
    "parallel_map",
]
