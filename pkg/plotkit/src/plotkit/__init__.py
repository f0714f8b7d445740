from .figures import (DEPTH_COLUMNS, ROBUSTNESS_COLUMNS, FigureSpec, SchemaError,
                      plot_depth, plot_robustness)

__all__ = ["DEPTH_COLUMNS", "ROBUSTNESS_COLUMNS", "FigureSpec", "SchemaError",
           "plot_depth", "plot_robustness"]
