"""Command-line front end.

    somor gen-msd  --n 100 --out msd.json
    somor reduce   --system msd.json --method loewner_m --grid 12:1e-2:1e2 --out rom.json
    somor bode     msd.json rom.json --grid 400:1e-2:1e2 --out bode.csv
    somor validate msd.json rom.json

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical
precondition failure (the error class name is printed).
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import io
import json
import os
import sys as _sys

import numpy as np

from . import __version__
from .errors import NumericalError, UsageError
from .loewner import (build_loewner, interpolant_family_k, interpolant_family_m, load_tangential,
                      load_tangential_csv, rayleigh_khat, rayleigh_mhat, rayleigh_residual,
                      sample_tangential, split_alternating, tangential_from_dict)
from .moments import InterpolationSet, interpolation_set_from_dict
from .numerics import is_positive_definite
from .reduction import (check_stability_condition_g, check_stability_condition_h, derivative_matching,
                        family_g, family_h, passive_galerkin_g, passive_galerkin_h, pole_placement,
                        stable_choice_g, stable_choice_h, two_sided)
from .system import (dumps, eval_transfer, eval_transfer_derivative, load_system, log_grid,
                     msd_benchmark, read_json, save_system)

METHODS = ('family_g', 'family_h', 'two_sided', 'pole_place', 'derivative', 'loewner_m',
           'loewner_k', 'rayleigh_m', 'rayleigh_k', 'stable_g', 'stable_h', 'passive_g',
           'passive_h')
LOEWNER_METHODS = ('loewner_m', 'loewner_k', 'rayleigh_m', 'rayleigh_k')
DEFAULT_TOL = 1e-8
DEFAULT_BODE_GRID = '400:1e-2:1e2'


class CliError(UsageError):
    pass


# -- argument helpers --------------------------------------------------------

def parse_grid(spec):
    """``count:lo:hi[:axis]`` with axis ``imag`` (default) or ``negreal``."""
    parts = str(spec).split(':')
    if len(parts) not in (3, 4):
        raise CliError(f'grid spec {spec!r} must look like count:lo:hi[:axis]')
    try:
        count, lo, hi = int(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise CliError(f'grid spec {spec!r} has non-numeric fields') from None
    axis = parts[3] if len(parts) == 4 else 'imag'
    if count < 1 or not 0 < lo <= hi or (count > 1 and lo == hi):
        raise CliError(f'grid spec {spec!r} needs count >= 1 and 0 < lo < hi')
    w = log_grid(count, lo, hi)
    if axis == 'imag':
        return 1j * w
    if axis == 'negreal':
        return -w.astype(complex)
    raise CliError(f'unknown grid axis {axis!r}; use imag or negreal')


def parse_points(value):
    """Points as a JSON-style list (numbers or ``[re, im]``) or a comma list."""
    if isinstance(value, str):
        value = value.strip()
        if value.startswith('['):
            value = json.loads(value)
        else:
            try:
                return np.array([complex(t.replace(' ', '')) for t in value.split(',')])
            except ValueError:
                raise CliError(f'cannot parse points {value!r}') from None
    out = []
    for x in value:
        if isinstance(x, list) and len(x) == 2:
            out.append(complex(x[0], x[1]))
        elif isinstance(x, (int, float)) and not isinstance(x, bool):
            out.append(complex(x))
        else:
            raise CliError(f'cannot parse point {x!r}')
    return np.array(out)


def _resolve_points(points, grid, what):
    if points is not None and grid is not None:
        raise CliError(f'give either explicit {what} points or a grid, not both')
    if points is not None:
        return parse_points(points)
    if grid is not None:
        return parse_grid(grid)
    return None


def _pairs(z):
    return [[float(x.real), float(x.imag)] for x in np.asarray(z, dtype=complex).ravel()]


def _sorted_eigs(eigs):
    eigs = np.asarray(eigs, dtype=complex)
    return eigs[np.lexsort((eigs.imag, eigs.real))]


# -- gen-msd -----------------------------------------------------------------

def cmd_gen_msd(args):
    try:
        sys = msd_benchmark(int(args.n), float(args.m), float(args.c), float(args.k))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    save_system(sys, args.out)
    print(f'n={sys.n} p={sys.p} q={sys.q} max_re_pole={sys.poles.max_real:.6e}')
    return 0


# -- reduce ------------------------------------------------------------------

def _random_params(rng, nu, p, q, side):
    F2 = np.eye(nu) + 0.1 * rng.standard_normal((nu, nu))
    F1 = rng.standard_normal((nu, nu))
    if side == 'g':
        return F2, F1, rng.standard_normal((nu, p)), rng.standard_normal((q, nu))
    return F2, F1, rng.standard_normal((q, nu)), rng.standard_normal((q, nu))


def _family_params(preset, seed, nu, p, q, side):
    preset = preset or f'random:{seed}'
    if preset == 'zero':
        return np.eye(nu), np.zeros((nu, nu)), *(
            (np.ones((nu, p)), np.zeros((q, nu))) if side == 'g' else
            (np.ones((q, nu)), np.zeros((q, nu))))
    if preset.startswith('random'):
        s = preset.split(':', 1)
        return _random_params(np.random.default_rng(int(s[1]) if len(s) > 1 else seed), nu, p, q, side)
    raise CliError(f'free-parameter preset {preset!r} is not available for family methods')


def _loewner_free(preset, seed, triple, nu):
    preset = preset or 'L'
    if preset == 'L':
        return triple.L
    if preset == 'Lss':
        return triple.Lss
    if preset == 'zero':
        return np.zeros((nu, nu))
    if preset.startswith('random'):
        s = preset.split(':', 1)
        rng = np.random.default_rng(int(s[1]) if len(s) > 1 else seed)
        return rng.standard_normal((nu, nu))
    raise CliError(f'unknown free-parameter preset {preset!r}')


def _point_residuals(full, red, iset):
    rows = []
    for s, d in iset.tangential_points():
        W, Wr = eval_transfer(full, s), eval_transfer(red, s)
        ref, got = (W @ d, Wr @ d) if iset.side == 'input' else (d @ W, d @ Wr)
        rows.append({'s': _pairs(s)[0], 'residual': _rel(ref, got)})
    return rows


def _data_residuals(model, data, full=None):
    """Per-point tangential residuals of `model` (against `full` when given)."""
    right, left = [], []
    for i, a in enumerate(data.alpha):
        ref = eval_transfer(full, a) @ data.R[:, i] if full is not None else data.W[:, i]
        right.append({'s': _pairs(a)[0], 'residual': _rel(ref, eval_transfer(model, a) @ data.R[:, i])})
    for j, b in enumerate(data.beta):
        ref = data.L[j] @ eval_transfer(full, b) if full is not None else data.V[j]
        left.append({'s': _pairs(b)[0], 'residual': _rel(ref, data.L[j] @ eval_transfer(model, b))})
    return {'right': right, 'left': left}


def _rel(ref, got):
    return float(np.linalg.norm(ref - got) / max(np.linalg.norm(ref), np.finfo(float).tiny))


def _definiteness(F2, F1, F0, tol=1e-12):
    return {name: is_positive_definite(X, tol) for name, X in (('F2', F2), ('F1', F1), ('F0', F0))}


def _reduce_loewner(args, full, points):
    if args.data:
        data = (load_tangential_csv(args.data) if args.data.lower().endswith('.csv')
                else load_tangential(args.data))
    else:
        if points is None:
            raise CliError('loewner methods need points, a grid, or a data file')
        alphas, betas = split_alternating(points)
        if alphas.size != betas.size:
            raise CliError('loewner methods need an even number of points')
        data = sample_tangential(full, alphas, betas)
    triple = build_loewner(data)
    report = {}
    if args.method in ('rayleigh_m', 'rayleigh_k'):
        if args.rayleigh is None:
            raise CliError('rayleigh methods need --rayleigh alpha,beta')
        ar, br = args.rayleigh
        if args.method == 'rayleigh_m':
            red = interpolant_family_m(data, rayleigh_mhat(data, ar, br, triple), triple)
        else:
            red = interpolant_family_k(data, rayleigh_khat(data, ar, br, triple), triple)
        report['rayleigh_residual'] = rayleigh_residual(red, ar, br)
    else:
        free = _loewner_free(args.free, args.seed, triple, data.nu)
        build = interpolant_family_m if args.method == 'loewner_m' else interpolant_family_k
        red = build(data, free, triple)
    report['residuals'] = _data_residuals(red.system, data)
    return red, report


def _reduce_projection(args, full, points, out_points):
    method = args.method
    if points is None and method not in ('family_h', 'stable_h', 'passive_h'):
        raise CliError(f'{method} needs interpolation points (--points or --grid)')
    iset = InterpolationSet.diagonal(points, side='input', width=full.p) if points is not None else None
    oset = None
    if method in ('family_h', 'stable_h', 'passive_h'):
        pts = out_points if out_points is not None else points
        if pts is None:
            raise CliError(f'{method} needs output-side points')
        oset = InterpolationSet.diagonal(pts, side='output', width=full.q)
        iset = None
    elif method == 'two_sided':
        if out_points is None:
            raise CliError('two_sided needs --output-points or --output-grid')
        oset = InterpolationSet.diagonal(out_points, side='output', width=full.q)

    report = {}
    if method == 'family_g':
        F2, F1, G, H1 = _family_params(args.free, args.seed, iset.nu, full.p, full.q, 'g')
        red = family_g(full, iset, None, F2, F1, G, H1)
    elif method == 'family_h':
        F2, F1, H0, H1 = _family_params(args.free, args.seed, oset.nu, full.p, full.q, 'h')
        red = family_h(full, oset, None, F2, F1, H0, H1)
    elif method == 'two_sided':
        red = two_sided(full, iset, None, oset, None, form=args.form or 'g')
    elif method == 'pole_place':
        if args.targets is None:
            raise CliError('pole_place needs --targets')
        red = pole_placement(full, iset, None, parse_points(args.targets))
    elif method == 'derivative':
        red = derivative_matching(full, iset, None)
        report['derivative_residuals'] = [
            {'s': _pairs(s)[0], 'residual': _rel(eval_transfer_derivative(full, s, 1) @ d,
                                                 eval_transfer_derivative(red.system, s, 1) @ d)}
            for s, d in iset.tangential_points()]
    elif method == 'stable_g':
        F2, F1, G = stable_choice_g(iset.shift, iset.direction)
        red = family_g(full, iset, None, F2, F1, G, np.zeros((full.q, iset.nu)), construction='stable_g')
        st = check_stability_condition_g(iset.shift, iset.direction, F2, F1, G)
        report['definiteness'] = {'conditions_hold': st.conditions_hold,
                                  'spectrally_stable': st.spectrally_stable}
    elif method == 'stable_h':
        F2, F1, H0, H1 = stable_choice_h(oset.shift, oset.direction)
        red = family_h(full, oset, None, F2, F1, H0, H1, construction='stable_h')
        st = check_stability_condition_h(oset.shift, oset.direction, F2, F1, H0, H1)
        report['definiteness'] = {'conditions_hold': st.conditions_hold,
                                  'spectrally_stable': st.spectrally_stable}
    elif method == 'passive_g':
        red = passive_galerkin_g(full, iset, None)
        report['definiteness'] = _definiteness(red.system.M, red.system.D, red.system.K)
    else:
        red = passive_galerkin_h(full, oset, None)
        report['definiteness'] = _definiteness(red.system.M, red.system.D, red.system.K)
    residuals = {}
    for key, s in (('input', iset), ('output', oset)):
        if s is not None:
            residuals[key] = _point_residuals(full, red.system, s)
    report['residuals'] = residuals
    return red, report


def cmd_reduce(args):
    if args.method is None:
        raise CliError('--method is required')
    if args.method not in METHODS:
        raise CliError(f'unknown method {args.method!r}; choose from {", ".join(METHODS)}')
    if args.out is None:
        raise CliError('--out is required')
    full = load_system(args.system) if args.system else None
    if full is None and not (args.method in LOEWNER_METHODS and args.data):
        raise CliError('--system is required')
    points = _resolve_points(args.points, args.grid, 'input')
    out_points = _resolve_points(args.output_points, args.output_grid, 'output')
    if args.method in LOEWNER_METHODS:
        red, report = _reduce_loewner(args, full, points)
    else:
        red, report = _reduce_projection(args, full, points, out_points)

    tol = args.tol if args.tol is not None else DEFAULT_TOL
    worst = max([r['residual'] for side in report['residuals'].values() for r in side], default=0.0)
    eigs = _sorted_eigs(red.poles)
    provenance = red.provenance()
    provenance['version'] = __version__
    save_system(red.system, args.out, extra={'provenance': provenance})
    full_report = {
        'version': __version__,
        'config': _config_dict(args),
        'method': args.method,
        'order': red.nu,
        'max_residual': worst,
        'tolerance': tol,
        'pencil_eigenvalues': _pairs(eigs),
        'max_real_pole': float(np.max(eigs.real)) if eigs.size else None,
        **report,
    }
    report_path = args.report or _default_report_path(args.out)
    with open(report_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(dumps(full_report))
    print(f'method={args.method} order={red.nu} max_residual={worst:.3e} report={report_path}')
    return 0


def _default_report_path(out):
    root, _ = os.path.splitext(out)
    return root + '.report.json'


# -- bode --------------------------------------------------------------------

def _num_threads():
    try:
        return max(1, int(os.environ.get('SOMOR_NUM_THREADS', '1')))
    except ValueError:
        raise CliError('SOMOR_NUM_THREADS must be an integer') from None


def bode_rows(systems, labels, omegas, entry=(0, 0)):
    """Rows ``(omega, label, mag_db, phase_deg)`` sorted by (label, omega)."""
    i, j = entry
    rows = []
    with ThreadPoolExecutor(max_workers=_num_threads()) as pool:
        for sys, label in zip(systems, labels):
            if i >= sys.q or j >= sys.p:
                raise CliError(f'{label}: entry {entry} outside a {sys.q}x{sys.p} transfer matrix')
            vals = np.array(list(pool.map(lambda w: eval_transfer(sys, 1j * w)[i, j], omegas)))
            mag = 20 * np.log10(np.abs(vals))
            phase = np.degrees(np.unwrap(np.angle(vals)))
            rows.extend(zip(omegas, [label] * len(omegas), mag, phase))
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


def cmd_bode(args):
    if not args.models:
        raise CliError('bode needs at least one system file')
    if args.out is None:
        raise CliError('--out is required')
    systems = [load_system(p) for p in args.models]
    labels, seen = [], {}
    for p in args.models:
        base = os.path.splitext(os.path.basename(p))[0]
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f'{base}#{seen[base]}')
    grid = parse_grid(args.grid or DEFAULT_BODE_GRID)
    if np.any(grid.real != 0):
        raise CliError('bode grids lie on the imaginary axis')
    omegas = grid.imag
    entry = tuple(int(x) for x in (args.entry or '0,0').split(','))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(['omega', 'model', 'mag_db', 'phase_deg'])
    for w, label, mag, ph in bode_rows(systems, labels, omegas, entry):
        writer.writerow([repr(float(w)), label, repr(float(mag)), repr(float(ph))])
    with open(args.out, 'w', encoding='utf-8', newline='') as f:
        f.write(buf.getvalue())
    print(f'wrote {len(systems) * len(omegas)} rows to {args.out}')
    return 0


# -- validate ----------------------------------------------------------------

def cmd_validate(args):
    if not args.full or not args.reduced:
        raise CliError('validate needs a full and a reduced system file')
    full = load_system(args.full)
    raw = read_json(args.reduced)
    red = load_system(args.reduced)
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    points = _resolve_points(args.points, args.grid, 'validation')
    results = []
    if points is not None:
        iset = InterpolationSet.diagonal(points, side='input', width=full.p)
        results += [('input', r) for r in _point_residuals(full, red, iset)]
    else:
        interp = (raw.get('provenance') or {}).get('interpolation') or {}
        if not interp:
            raise CliError('reduced file has no provenance points; pass --points or --grid')
        for key in sorted(interp):
            entry = interp[key]
            if 'right' in entry:
                res = _data_residuals(red, tangential_from_dict(entry), full)
                results += [(side, r) for side in ('right', 'left') for r in res[side]]
            else:
                iset = interpolation_set_from_dict(entry)
                results += [(iset.side, r) for r in _point_residuals(full, red, iset)]
    worst = 0.0
    for side, r in results:
        s = complex(*r['s'])
        print(f'{side:6s} s={s.real:+.6e}{s.imag:+.6e}j residual={r["residual"]:.3e}')
        worst = max(worst, r['residual'])
    ok = worst <= tol
    print(f'{"PASS" if ok else "FAIL"} max_residual={worst:.3e} tol={tol:.1e}')
    return 0 if ok else 1


# -- entry point -------------------------------------------------------------

def _config_dict(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ('func', 'config')}


def _rayleigh(value):
    if isinstance(value, (list, tuple)):
        parts = value
    else:
        parts = str(value).split(',')
    try:
        a, b = (float(x) for x in parts)
    except (ValueError, TypeError):
        raise CliError(f'--rayleigh expects alpha,beta, got {value!r}') from None
    return a, b


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with default values for any option')
    common.add_argument('--seed', type=int, default=None, help='seed for all randomness (default 0)')
    common.add_argument('--tol', type=float, default=None, help='validation tolerance (default 1e-8)')

    parser = argparse.ArgumentParser(prog='somor', parents=[common],
                                     description='Second-order moment matching and Loewner reduction.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command')

    g = sub.add_parser('gen-msd', parents=[common], help='write the mass-spring-damper benchmark')
    g.add_argument('--n', type=int, default=None)
    g.add_argument('--m', type=float, default=None)
    g.add_argument('--c', type=float, default=None)
    g.add_argument('--k', type=float, default=None)
    g.add_argument('--out', default=None)

    r = sub.add_parser('reduce', parents=[common], help='build a reduced model')
    r.add_argument('--system', default=None, help='full system JSON')
    r.add_argument('--data', default=None, help='tangential data (JSON or SISO CSV) for Loewner methods')
    r.add_argument('--method', default=None, choices=METHODS)
    r.add_argument('--points', default=None, help='input-side points, e.g. "1j,-1j" or JSON list')
    r.add_argument('--grid', default=None, help='count:lo:hi[:imag|negreal]')
    r.add_argument('--output-points', dest='output_points', default=None)
    r.add_argument('--output-grid', dest='output_grid', default=None)
    r.add_argument('--free', default=None, help='free-parameter preset: L, Lss, zero, random:SEED')
    r.add_argument('--targets', default=None, help='pole_place target poles')
    r.add_argument('--rayleigh', default=None, help='alpha,beta for rayleigh methods')
    r.add_argument('--form', default=None, choices=('g', 'h'), help='two_sided realization')
    r.add_argument('--out', default=None)
    r.add_argument('--report', default=None)

    b = sub.add_parser('bode', parents=[common], help='frequency-response CSV of one or more systems')
    b.add_argument('models', nargs='*')
    b.add_argument('--grid', default=None, help=f'count:lo:hi (default {DEFAULT_BODE_GRID})')
    b.add_argument('--entry', default=None, help='transfer-matrix entry i,j (default 0,0)')
    b.add_argument('--out', default=None)

    v = sub.add_parser('validate', parents=[common], help='check a reduced model against the full one')
    v.add_argument('full', nargs='?')
    v.add_argument('reduced', nargs='?')
    v.add_argument('--points', default=None)
    v.add_argument('--grid', default=None)
    return parser


_GEN_DEFAULTS = {'n': 100, 'm': 1.0, 'c': 0.1, 'k': 1.5}
_COMMANDS = {'gen-msd': cmd_gen_msd, 'reduce': cmd_reduce, 'bode': cmd_bode, 'validate': cmd_validate}


def _apply_config(args, parser):
    if not args.config:
        return args
    cfg = read_json(args.config)
    if not isinstance(cfg, dict):
        raise CliError('config file must hold a JSON object')
    command = cfg.get('command')
    if args.command is None:
        if command not in _COMMANDS:
            raise CliError('no command given on the command line or in the config')
        # re-parse so the subcommand's options exist on the namespace
        args = parser.parse_args([command, '--config', args.config])
    for key, value in cfg.items():
        key = key.replace('-', '_')
        if key in ('command', 'config'):
            continue
        if not hasattr(args, key):
            raise CliError(f'config key {key!r} is not an option of {args.command}')
        if getattr(args, key) is None:
            if key in ('points', 'output_points', 'targets') and isinstance(value, list):
                value = json.dumps(value)
            setattr(args, key, value)
    return args


def _finalize(args):
    if args.seed is None:
        args.seed = 0
    if args.command == 'gen-msd':
        for key, val in _GEN_DEFAULTS.items():
            if getattr(args, key) is None:
                setattr(args, key, val)
        if args.out is None:
            raise CliError('--out is required')
    if args.command == 'reduce' and args.rayleigh is not None:
        args.rayleigh = _rayleigh(args.rayleigh)
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parser)
        if args.command is None:
            parser.print_usage(_sys.stderr)
            raise CliError('a command is required')
        args = _finalize(args)
        return _COMMANDS[args.command](args)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f'error: {type(exc).__name__}: {exc}', file=_sys.stderr)
        return 3
    except (UsageError, ValueError, OSError) as exc:
        print(f'error: {type(exc).__name__}: {exc}', file=_sys.stderr)
        return 2


if __name__ == '__main__':
    raise SystemExit(main())
