from typing import Dict, List, Sequence

import numpy as np
import matplotlib.pyplot as plt


def get_extent(grid) -> List[float]:
    return [grid.x1_min, grid.x1_max, grid.x2_min, grid.x2_max]


def plot_indicator(grid,
                   profile=None,
                   title: str = None,
                   cmap: str = 'viridis',
                   img_name: str = None,
                   show: bool = False) -> None:
    """
    Plots an indicator grid as a heatmap.

    Rows of grid.values follow x2 and columns follow x1, so the first row is
    drawn at the bottom. When a profile is given, the true surface
    x2 = f(x1) is drawn on top as a polyline.

    Args:
        grid (ImageGrid): sampling grid with values.
        profile (SurfaceProfile, optional): surface to overlay. Defaults to None.
        title (str, optional): plot title. Defaults to the grid's indicator name.
        cmap (str, optional): matplotlib colormap. Defaults to 'viridis'.
        img_name (str, optional): if not None, the plot will be
            saved to img_name. Defaults to None.
        show (bool, optional): if True, plt.show() is called. Defaults to False.
    """
    assert grid.values is not None, "grid has no values"

    fig, ax = plt.subplots()
    fig.set_figheight(4)
    fig.set_figwidth(12)

    image = ax.imshow(grid.values, origin='lower', extent=get_extent(grid),
                      aspect='auto', cmap=cmap)
    fig.colorbar(image, ax=ax)

    if profile is not None:
        x1 = np.linspace(grid.x1_min, grid.x1_max, 4 * grid.n1)
        ax.plot(x1, profile.height(x1), color='white', linewidth=1.0, linestyle='--',
                label=f'true surface ({profile.kind})')
        ax.set_ylim(grid.x2_min, grid.x2_max)
        ax.legend(loc='upper right')

    ax.set_xlabel('x1')
    ax.set_ylabel('x2')
    ax.set_title(title or grid.metadata.get('indicator', 'indicator'))

    if img_name is not None:
        plt.savefig(img_name, dpi=150, bbox_inches='tight')
    if show:
        plt.show()
    plt.close(fig)


def plot_remainder_decay(curves: Dict[str, Sequence[Sequence[float]]],
                         img_name: str = None,
                         show: bool = False) -> None:
    """
    Log-log plot of max |remainder| against the acquisition radius.

    curves maps a label (for example the kind of the background) to a pair
    (radii, maxima). A dotted 1 / rho reference line is drawn through the
    first point of every curve.
    """
    assert len(curves) > 0, "curves is empty"

    fig, ax = plt.subplots()
    for label, (radii, maxima) in curves.items():
        radii, maxima = np.asarray(radii, dtype=float), np.asarray(maxima, dtype=float)
        ax.loglog(radii, maxima, marker='o', label=label)
        ax.loglog(radii, maxima[0] * radii[0] / radii, linestyle=':', color='grey')

    ax.set_xlabel('acquisition radius')
    ax.set_ylabel('max |remainder|')
    ax.legend()

    if img_name is not None:
        plt.savefig(img_name, dpi=150, bbox_inches='tight')
    if show:
        plt.show()
    plt.close(fig)
