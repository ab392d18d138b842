"""
Output helpers shared by the CLI and the HTTP service.
"""
from utils.output import OutputFormat, render, write_output

__all__ = ["OutputFormat", "render", "write_output"]
