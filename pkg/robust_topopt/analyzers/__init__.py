from .analyzer import RobustRunAnalyzer, RobustRunAnalyzerConfig, RunAnalyzer
from .exporters import export_field, export_report, read_pgm, read_report
