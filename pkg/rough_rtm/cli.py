"""
Command line front end.

    python -m rough_rtm forward  --config run.ini --out data.rtmd
    python -m rough_rtm image    --config run.ini --data data.rtmd --out image.rtmg [--pgm image.pgm]
    python -m rough_rtm selftest quick|full [--plot decay.png]
    python -m rough_rtm render   image.rtmg image.pgm [--png image.png] [--config run.ini]
    python -m rough_rtm greens   --field halfplane --point 0.5 1.0 --source 0 2

Exit codes: 0 success, 1 failed self-test, 2 configuration or domain error,
3 solver error, 4 I/O or file format error.
"""
import argparse
import logging
import time
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .models.experiment import Experiment
from .modules.config import PRESETS, RunConfig, load_config
from .modules.data_io import read_grid, read_scatter_data, write_grid, write_pgm, write_scatter_data
from .modules.errors import ConfigError, RtmError
from .modules.greens import (
    FlatTwoLayerPointSource, HalfPlaneGreen, ImpenetrablePlaneWave, PenetrablePlaneWave, TwoLayerMedium,
    fresnel, gammaR_surface, planewave_background_gammaR,
)
from .modules.verify import format_reports, full_suite, quick_suite

logger = logging.getLogger(__name__)

FIELDS = ('halfplane', 'planewave', 'fresnel-field', 'flat-two-layer', 'gammaR-point', 'gammaR-planewave')


def _config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help="INI file with [surface], [medium], ... sections")
    parser.add_argument('--preset', default='desk-scale', choices=sorted(PRESETS),
                        help="parameter set: desk-scale or paper-scale (R = 95, k1 = 10)")
    parser.add_argument('--threads', type=int, help="worker threads (results do not depend on it)")
    parser.add_argument('--seed', type=int, help="noise seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='rough_rtm', description="Reverse time migration for locally rough surfaces")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    commands = parser.add_subparsers(dest='command', required=True)

    forward = commands.add_parser('forward', help="synthesize scattering data")
    _config_flags(forward)
    forward.add_argument('--out', required=True, help="output RTMD file")
    forward.add_argument('--regime', choices=['near', 'far'])
    forward.add_argument('--kernel-cache', help="RTMV file for the penetrable background kernel")

    image = commands.add_parser('image', help="compute the indicator on the sampling grid")
    _config_flags(image)
    image.add_argument('--data', required=True, help="input RTMD file")
    image.add_argument('--out', required=True, help="output RTMG file")
    image.add_argument('--regime', choices=['near', 'far'])
    image.add_argument('--pgm', help="also render a 16-bit PGM")
    image.add_argument('--kernel-cache', help="RTMV file for the penetrable background kernel")

    selftest = commands.add_parser('selftest', help="identity checks")
    selftest.add_argument('level', choices=['quick', 'full'])
    selftest.add_argument('--plot', help="write the remainder decay of the full suite as a PNG")

    render = commands.add_parser('render', help="render an RTMG grid")
    render.add_argument('grid', help="input RTMG file")
    render.add_argument('out', help="output PGM file")
    render.add_argument('--png', help="also write a PNG heatmap")
    render.add_argument('--config', help="overlay the surface of this configuration on the PNG")
    render.add_argument('--preset', default='desk-scale', choices=sorted(PRESETS),
                        help="parameter set of the overlay configuration")

    greens = commands.add_parser('greens', help="evaluate a background field at a point")
    _config_flags(greens)
    greens.add_argument('--field', required=True, choices=FIELDS)
    greens.add_argument('--point', type=float, nargs=2, required=True, metavar=('X1', 'X2'))
    greens.add_argument('--source', type=float, nargs=2, metavar=('Y1', 'Y2'),
                        help="point source position")
    greens.add_argument('--angle', type=float, help="incident direction (cos a, sin a), radians")
    return parser


def _load(args: argparse.Namespace, **overrides) -> RunConfig:
    overrides.update({'solver.threads': getattr(args, 'threads', None),
                      'noise.seed': getattr(args, 'seed', None)})
    config = load_config(args.config, args.preset, overrides)
    for line in config.describe():
        print(line)
    return config


def cmd_forward(args: argparse.Namespace) -> int:
    config = _load(args, **{'acquisition.regime': args.regime})
    start = time.perf_counter()
    experiment = Experiment(config, args.kernel_cache)
    data = experiment.synthesize()
    write_scatter_data(data, args.out)
    print(f"data {data.regime} {data.kind} {data.n_receivers}x{data.n_sources} -> {args.out}")
    print(f"|V|_F = {np.linalg.norm(data.matrix):.6e}  max |V| = {np.max(np.abs(data.matrix)):.6e}")
    print(f"noise tau = {data.tau:g}  seed = {data.seed}  generator = {data.generator}")
    for name, value in experiment.diagnostics().items():
        print(f"{name} = {value:.3e}")
    print(f"elapsed {time.perf_counter() - start:.2f}s")
    return 0


def cmd_image(args: argparse.Namespace) -> int:
    config = _load(args)
    start = time.perf_counter()
    data = read_scatter_data(args.data)
    experiment = Experiment(config, args.kernel_cache)
    grid = experiment.image(data, args.regime)
    write_grid(grid, args.out)
    print(f"image -> {args.out}")
    print(experiment.summary(grid))
    if args.pgm:
        write_pgm(grid, args.pgm)
        print(f"rendering -> {args.pgm}")
    print(f"elapsed {time.perf_counter() - start:.2f}s")
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    reports = quick_suite() if args.level == 'quick' else full_suite()
    print(format_reports(reports))
    curves = {report.parameters['kind']: (report.parameters['radii'], report.parameters['maxima'])
              for report in reports if 'maxima' in report.parameters}
    if args.plot and curves:
        from utils.plot import plot_remainder_decay
        plot_remainder_decay(curves, img_name=args.plot)
        print(f"remainder decay -> {args.plot}")
    failed = [report.name for report in reports if not report.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} passed in {time.perf_counter() - start:.1f}s")
    if failed:
        print("failed: " + ", ".join(failed))
        return 1
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    grid = read_grid(args.grid)
    write_pgm(grid, args.out)
    print(f"rendering -> {args.out}")
    if args.png:
        # matplotlib is only needed for PNG output
        from utils.plot import plot_indicator
        profile = load_config(args.config, args.preset).profile() if args.config else None
        plot_indicator(grid, profile, img_name=args.png)
        print(f"heatmap -> {args.png}")
    return 0


def _direction(args: argparse.Namespace) -> np.ndarray:
    if args.angle is None:
        raise ConfigError(f"field {args.field} needs --angle", 'greens.angle')
    return np.array([np.cos(args.angle), np.sin(args.angle)])


def _source(args: argparse.Namespace) -> np.ndarray:
    if args.source is None:
        raise ConfigError(f"field {args.field} needs --source", 'greens.source')
    return np.array(args.source, dtype=float)


def cmd_greens(args: argparse.Namespace) -> int:
    config = _load(args)
    options = config.options()
    field = args.field
    # flat two-layer fields use both wavenumbers whatever the configured kind
    medium = TwoLayerMedium(config.k1, config['medium.k2'])
    if field == 'halfplane':
        background = HalfPlaneGreen(config.kind, config.k1, _source(args))
    elif field == 'planewave':
        background = ImpenetrablePlaneWave(config.kind, config.k1, _direction(args))
    elif field == 'fresnel-field':
        direction = _direction(args)
        coeffs = fresnel(medium.k1, medium.k2, args.angle)
        print(f"R = {coeffs.reflection:.12g}  T = {coeffs.transmission:.12g}  "
              f"critical angle = {coeffs.critical_angle:.12g}")
        background = PenetrablePlaneWave(medium, direction)
    elif field == 'flat-two-layer':
        background = FlatTwoLayerPointSource(medium, _source(args))
    elif field == 'gammaR-point':
        surface = gammaR_surface(config.kind, config.k1, config.k2, config.dip_radius, options)
        background = surface.solve_point_sources(_source(args)[None, :]).field(0)
    else:
        background = planewave_background_gammaR(config.kind, _direction(args), config.k1,
                                                  config.dip_radius, config.k2, options)
    point = np.array(args.point, dtype=float)[None, :]
    value, gradient = background.evaluate(point, gradient=True)
    print(f"{field} at ({point[0, 0]:g}, {point[0, 1]:g})")
    print(f"value    = {complex(value[0]):.12g}")
    print(f"gradient = ({complex(gradient[0, 0]):.12g}, {complex(gradient[0, 1]):.12g})")
    return 0


COMMANDS = {
    'forward': cmd_forward,
    'image': cmd_image,
    'selftest': cmd_selftest,
    'render': cmd_render,
    'greens': cmd_greens,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return COMMANDS[args.command](args)
    except RtmError as error:
        logger.error("%s", error)
        return error.exit_code
    except OSError as error:
        logger.error("%s", error)
        return 4


__all__ = ['build_parser', 'main']
