from .figures import (
    FIGURE_KINDS,
    MissingColumnError,
    PlotDataError,
    PlotJob,
    fit_loglog_slope,
    plot_convergence,
    plot_scaling,
    read_report,
    read_solve_dir,
    render,
)

__version__ = "0.1.0"
