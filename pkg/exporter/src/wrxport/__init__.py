"""Hidden-state exporter: pretrained speech encoder -> WRX1 tensor files."""

from .export import ExportJob, ExportReport, export, write_wrx1

__version__ = "0.1.0"

__all__ = ["ExportJob", "ExportReport", "export", "write_wrx1", "__version__"]
