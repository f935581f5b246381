"""All figure styling defaults in one place."""

FIGSIZE = (7.0, 4.5)
DPI = 150

LINEWIDTH = 1.5
MARKER = "o"
MARKERSIZE = 4.0
GRID_ALPHA = 0.3

INIT_COLOR = "tab:orange"
TRAINED_COLOR = "tab:blue"
EPOCHS_COLOR = "tab:green"
DRIFT_COLOR = "tab:red"

BAR_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")
BAR_WIDTH = 0.6
CAPSIZE = 4.0


def finish_axes(ax) -> None:
    """Grid and spine defaults shared by every figure."""
    ax.grid(alpha=GRID_ALPHA)
    ax.set_axisbelow(True)
