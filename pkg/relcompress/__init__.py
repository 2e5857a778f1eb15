"""relcompress - relevance-aware time-series compression."""

__version__ = "0.1.1"
__author__ = "relcompress contributors"
__description__ = "Relevance-aware time-series segmentation, reconstruction and streaming synopsis"
