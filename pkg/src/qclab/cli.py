"""Command-line interface: every module as a subcommand, JSON in, JSON/CSV out.

Outputs are deterministic at fixed config and seed (byte-identical JSON apart
from the timestamp field), carry a config echo, the code version, and the
completeness/tail metadata of the producing module.  Exit codes: 0 ok,
2 configuration error, 3 compute error.
"""

import argparse
import csv
import datetime
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, QclabError

SCHEMA_VERSION = "1"


def _load_schema(name):
    with resources.files("qclab.schemas").joinpath(name).open() as fh:
        return json.load(fh)


def validate_config(config):
    import jsonschema

    schema = _load_schema("config.json")
    try:
        jsonschema.validate(config, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc.message}") from exc


def _document(subcommand, config, results):
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": config,
        "code_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "results": results,
    }


def _write_outputs(outdir, subcommand, doc, tables=None):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{subcommand}.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for name, (header, rows) in (tables or {}).items():
        with open(outdir / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    return path


# --------------------------------------------------------------------------
# handlers
# --------------------------------------------------------------------------


def run_geometry(config):
    from .geometry import integrate_popp, invariance_report, periodic_grid
    from .models import make_model

    qc = make_model(config["model"], orientation=config.get("orientation", 1))
    grid = periodic_grid(config.get("grid_n", 8))
    rep = invariance_report(qc, grid)
    results = rep.as_dict()
    results["popp_volume"] = integrate_popp(qc, grid)
    return results, {}


def run_spectrum(config):
    from . import spectral as S
    from .models import make_model

    model = config["model"]
    route = config.get("route", "oracle")
    lam_max = config.get("lambda_max", 200.0)
    if route == "oracle":
        spec = S.oracle_spectrum(model, lam_max)
    elif model == "heisenberg_circle":
        spec = S.heisenberg_grid_spectrum(
            lam_max, N=config.get("grid_n", 16), count=config.get("count", 40)
        )
    else:
        qc = make_model(model, orientation=config.get("orientation", 1))
        spec = S.grid_spectrum(
            qc,
            lambda_max=lam_max,
            N=config.get("grid_n", 16),
            count=config.get("count", 30),
            tol=config.get("tol", 1e-6),
            seed=config.get("seed", 0),
        )
    results = {
        "model": model,
        "provenance": spec.provenance,
        "lambda_max": spec.lambda_max,
        "count": spec.total_count,
        "eigenvalues": spec.eigenvalues.tolist(),
        "multiplicities": spec.multiplicities.tolist(),
        "certificate": spec.certificate,
    }
    rows = list(zip(spec.eigenvalues.tolist(), spec.multiplicities.tolist()))
    return results, {"eigenvalues.csv": (["eigenvalue", "multiplicity"], rows)}


def run_weyl(config):
    from . import spectral as S
    from .geometry import integrate_popp, periodic_grid
    from .models import make_model

    model = config.get("model", "trig_torus")
    lam_max = config.get("lambda_max", 2000.0)
    spec = S.oracle_spectrum(model, lam_max)
    fitted, lams, ratios = S.weyl_fit(spec)
    qc = make_model(model)
    P = integrate_popp(qc, periodic_grid(8))
    results = {
        "model": model,
        "lambda_max": lam_max,
        "lambda_grid": lams.tolist(),
        "ratios": ratios.tolist(),
        "fitted_constant": fitted,
        "popp_volume": P,
        "target_stated": P / (24 * math.pi),
        "target_consistent": P / (60 * math.pi),
        "note": "stated target inherits the source's Tauberian constant; the "
        "consistent target matches the verified heat normalization "
        "(see decisions ledger)",
    }
    rows = list(zip(lams.tolist(), ratios.tolist()))
    return results, {"weyl_ratios.csv": (["lambda", "ratio"], rows)}


def run_heat(config):
    from . import spectral as S
    from .geometry import integrate_popp, periodic_grid
    from .models import make_model

    model = config.get("model", "trig_torus")
    lam_max = config.get("lambda_max", 2000.0)
    spec = S.oracle_spectrum(model, lam_max)
    a0, ts, Fs = S.heat_normalization(
        spec, t_lo=config.get("t_lo"), t_hi=config.get("t_hi")
    )
    P = integrate_popp(make_model(model), periodic_grid(8))
    results = {
        "model": model,
        "lambda_max": lam_max,
        "t_grid": ts.tolist(),
        "scaled_trace": Fs.tolist(),
        "extrapolated": a0,
        "target": P / (32 * math.sqrt(math.pi)),
        "mehler_unit_mass": 1 / (32 * math.sqrt(math.pi)),
        "popp_volume": P,
    }
    rows = list(zip(ts.tolist(), Fs.tolist()))
    return results, {"heat_trace.csv": (["t", "t52_trace"], rows)}


def run_wave(config):
    from . import spectral as S
    from .geometry import integrate_popp, periodic_grid
    from .models import make_model

    model = config.get("model", "trig_torus")
    lam_max = config.get("lambda_max", 7200.0)
    spec = S.oracle_spectrum(model, lam_max)
    T = config.get("window_T", 0.75)
    win = S.cosine_window(T=T, m=4)
    lam_lo = config.get("lambda_lo", 30.0)
    lam_hi = config.get("lambda_hi", 60.0)
    lams = np.linspace(lam_lo, lam_hi, config.get("n_lambda", 13))
    vals, tails = [], []
    for lam in lams:
        tv = S.smoothed_wave_trace(spec, win, float(lam))
        vals.append(tv.value)
        tails.append(tv.tail_bound)
    A = np.vander(lams, 5)[:, ::-1][:, 2:5]
    coef, *_ = np.linalg.lstsq(A, np.asarray(vals), rcond=None)
    P = integrate_popp(make_model(model), periodic_grid(8))
    results = {
        "model": model,
        "lambda_max": lam_max,
        "window_T": T,
        "lambda_grid": lams.tolist(),
        "values": [float(v) for v in vals],
        "tail_bounds": tails,
        "fitted_constant": float(coef[-1]),
        "target_stated": win.theta0 * P / (24 * math.pi),
        "target_consistent": win.theta0 * P / (12 * math.pi),
    }
    # qualitative singular-support comparison on the Heisenberg model
    if config.get("model", "trig_torus") == "trig_torus":
        hspec = S.oracle_spectrum("heisenberg_circle", 25600.0)
        w_in = S.cosine_window(T=0.3, m=4).translate(0.5)
        w_ab = S.cosine_window(T=0.3, m=4).translate(1.0)
        lamq = 32.0
        v_in = S.smoothed_wave_trace(hspec, w_in, lamq, tail_fraction=math.inf)
        v_ab = S.smoothed_wave_trace(hspec, w_ab, lamq, tail_fraction=math.inf)
        results["singular_support"] = {
            "model": "heisenberg_circle",
            "lambda": lamq,
            "inner_window": abs(v_in.value),
            "window_at_abnormal_period": abs(v_ab.value),
            "ratio": abs(v_ab.value) / max(abs(v_in.value), 1e-300),
        }
    rows = list(zip(lams.tolist(), [float(v) for v in vals], tails))
    return results, {"wave_trace.csv": (["lambda", "value", "tail_bound"], rows)}


def run_hermite(config):
    from . import hermite as H

    basis = H.HermiteBasis(
        k_max=config.get("k_max", 20), M=config.get("m_nodes", 512)
    )
    rng = np.random.default_rng(config.get("seed", 0))
    v = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    # orthogonality residual
    G = basis.tables[0] @ basis.tables[0].T * basis.dx1
    orth = float(np.max(np.abs(G - np.eye(basis.k_max + 1))))
    # oscillator identity
    osc = 0.0
    for k in [0, basis.k_max // 2, basis.k_max]:
        u = H.hermite_synthesis(basis, v, k)
        res = H.apply_oscillator(basis, u) - (2 * k + 1) * u
        osc = max(osc, H.field_norm(basis, res) / H.field_norm(basis, u))
    # raising residual
    k = 3
    u = H.hermite_synthesis(basis, v, k)
    vh = np.fft.fft(v, axis=-1)
    for n in basis.ns:
        vh[..., n] *= math.sqrt(2 * (k + 1) * 2 * math.pi * n)
    rhs = H.hermite_synthesis(basis, np.fft.ifft(vh, axis=-1), k + 1)
    raising = H.field_norm(basis, H.apply_raising(basis, u) - rhs) / H.field_norm(
        basis, u
    )
    # parseval
    u = sum(
        H.hermite_synthesis(basis, v * (0.8**k), k) for k in range(10)
    )
    total = sum(
        H.coeff_norm(basis, H.hermite_analysis(basis, u, k)) ** 2
        for k in range(basis.k_max + 1)
    )
    parseval = abs(total - H.field_norm(basis, u) ** 2) / H.field_norm(basis, u) ** 2
    ladder = H.field_norm(
        basis, H.apply_lowering(basis, H.hermite_synthesis(basis, v, 0))
    ) / H.coeff_norm(basis, v)
    results = {
        "k_max": basis.k_max,
        "m_nodes": basis.M,
        "L": basis.L,
        "orthogonality_residual": orth,
        "oscillator_residual": float(osc),
        "raising_residual": float(raising),
        "parseval_residual": float(parseval),
        "ladder_closure_residual": float(ladder),
        "tolerances": {
            "orthogonality": 1e-8,
            "oscillator": 1e-6,
            "raising": 1e-6,
            "parseval": 1e-6,
            "ladder": 1e-8,
        },
    }
    return results, {}


def _parse_fraction(s):
    return Fraction(s)


def run_bnf(config):
    from .normalform import (
        BasePoly,
        JetSymbol,
        QI,
        birkhoff_normal_form,
        leading_block,
        poisson_bracket,
        reconjugate,
    )
    from . import normalform as NF

    jet_desc = config.get("jet", {})
    n_max = int(config.get("n_max", jet_desc.get("n_max", 8)))
    base_order = int(jet_desc.get("base_order", 16))
    rho = _parse_fraction(jet_desc.get("rho", "1/3"))
    sym = leading_block(rho, n_max, base_order)
    for term in jet_desc.get("terms", []):
        a, b, c = int(term["a"]), int(term["b"]), int(term["c"])
        re = _parse_fraction(term.get("re", "0"))
        im = _parse_fraction(term.get("im", "0"))
        exp = tuple(term.get("exp", [0, 0, 0, 0]))
        coeff = BasePoly({exp: QI(re, im)}, base_order)
        sym.set(a, b, c, sym.get(a, b, c) + coeff)
    res = birkhoff_normal_form(sym)
    rec = reconjugate(sym, res.generator_sequence)

    def dump(js):
        out = []
        for (a, b, c), v in sorted(js.terms.items()):
            for exp, q in sorted(v.terms.items()):
                out.append(
                    {
                        "a": a,
                        "b": b,
                        "c": c,
                        "exp": list(exp),
                        "re": str(q.re),
                        "im": str(q.im),
                    }
                )
        return out

    exact = True
    for (a, b, c), v in rec.terms.items():
        if (a, b, c) == (2, 0, 0):
            v = v - BasePoly.const(QI(1), base_order)
        if 2 * a + b + c < n_max and (b != c or a > 0) and not v.is_zero():
            exact = False
    results = {
        "n_max": n_max,
        "generator": dump(res.generator),
        "remainder": dump(res.remainder),
        "residual": dump(res.residual),
        "exact_below_n_max": exact,
        "remainder_commutes_with_oscillator": poisson_bracket(
            NF.omega_part(sym), res.remainder
        ).is_zero(),
    }
    return results, {}


def run_flow(config):
    from .dynamics import BlowupState, zhat_flow
    from .geometry import PoppData
    from .models import make_model

    qc = make_model(config.get("model", "trig_torus"))
    pd = PoppData(qc)
    x = np.asarray(config.get("x", [0.0, 0.5, 0.5, 0.25]), dtype=float)
    xi0 = config.get("xi0", 0.5)
    t = config.get("t", 1.0)
    out, sol = zhat_flow(pd, BlowupState(x, xi0), t, dense=True)
    ts = np.linspace(0.0, t, 65)
    ys = sol.sol(ts)
    if ys.shape[0] == 4:
        xi = np.full(len(ts), xi0)
        xs = ys.T
    else:
        xs = ys[:4].T
        xi = np.tanh(ys[4] / 2.0)
    results = {
        "model": qc.name,
        "initial": {"x": x.tolist(), "xi0": xi0},
        "t": t,
        "final": {"x": out.x.tolist(), "xi0": out.xi0},
    }
    rows = [
        [float(tt)] + [float(c) for c in xx] + [float(z)]
        for tt, xx, z in zip(ts, xs, xi)
    ]
    return results, {
        "trajectory.csv": (["t", "x0", "x1", "x2", "x3", "xi0"], rows)
    }


def run_periods(config):
    from .dynamics import hat_T, negative_bands, orbit_from_model, period_spectrum
    from .geometry import PoppData
    from .models import make_model

    T_max = config.get("T_max", 12.0)
    if "orbits" in config:
        orbits = [
            (float(T), math.inf if Th in ("inf", "Infinity") else float(Th))
            for T, Th in config["orbits"]
        ]
        orbit_meta = [{"T": T, "That": ("inf" if math.isinf(Th) else Th)} for T, Th in orbits]
    else:
        qc = make_model(config.get("model", "trig_torus"))
        orbit = orbit_from_model(qc, PoppData(qc))
        Th = hat_T(orbit)
        orbits = [(orbit.T, Th)]
        orbit_meta = [
            {
                "T": orbit.T,
                "That": "inf" if math.isinf(Th) else Th,
                "volume_preserving": orbit.volume_preserving,
            }
        ]
    bands = period_spectrum(orbits, T_max)
    results = {
        "T_max": T_max,
        "orbits": orbit_meta,
        "bands": [[lo, hi] for lo, hi in bands],
        "bands_negative": [[lo, hi] for lo, hi in negative_bands(bands)],
    }
    rows = [[lo, hi] for lo, hi in bands]
    return results, {"bands.csv": (["band_lo", "band_hi"], rows)}


def run_qe(config):
    from . import analysis as AN

    n_modes = config.get("n_modes", 320)
    name = config.get("observable", "sin2pix3")
    table = {
        "sin2pix3": (lambda x: np.sin(2 * np.pi * x), 0.0, "sin(2 pi x3)"),
        "cos4pix3": (lambda x: np.cos(4 * np.pi * x), 0.0, "cos(4 pi x3)"),
        "bump": (lambda x: 0.5 * (1 + np.cos(4 * np.pi * x)), 0.5, "pi-periodic bump"),
    }
    if name not in table:
        raise ConfigError(f"unknown observable {name!r}; choose from {sorted(table)}")
    fn, target, label = table[name]
    rep = AN.qe_report(n_modes, b_x3=fn, E_target=target, name=label)
    results = {
        "observable": label,
        "window_count": rep.window_count,
        "lambda_grid": rep.lambdas.tolist(),
        "E_running": rep.E_running.tolist(),
        "V_running": rep.V_running.tolist(),
        "target": rep.E_target,
    }
    rows = list(
        zip(rep.lambdas.tolist(), rep.E_running.tolist(), rep.V_running.tolist())
    )
    return results, {"qe_running.csv": (["lambda", "E_running", "V_running"], rows)}


HANDLERS = {
    "geometry": run_geometry,
    "spectrum": run_spectrum,
    "weyl": run_weyl,
    "heat": run_heat,
    "wave": run_wave,
    "hermite": run_hermite,
    "bnf": run_bnf,
    "flow": run_flow,
    "periods": run_periods,
    "qe": run_qe,
}

_FLAGS = [
    ("--model", str, "model"),
    ("--orientation", int, "orientation"),
    ("--grid-n", int, "grid_n"),
    ("--lambda-max", float, "lambda_max"),
    ("--route", str, "route"),
    ("--count", int, "count"),
    ("--tol", float, "tol"),
    ("--seed", int, "seed"),
    ("--threads", int, "threads"),
    ("--t-lo", float, "t_lo"),
    ("--t-hi", float, "t_hi"),
    ("--window-T", float, "window_T"),
    ("--window-center", float, "window_center"),
    ("--lambda-lo", float, "lambda_lo"),
    ("--lambda-hi", float, "lambda_hi"),
    ("--n-lambda", int, "n_lambda"),
    ("--k-max", int, "k_max"),
    ("--m-nodes", int, "m_nodes"),
    ("--xi0", float, "xi0"),
    ("--t", float, "t"),
    ("--T-max", float, "T_max"),
    ("--n-modes", int, "n_modes"),
    ("--observable", str, "observable"),
    ("--n-max", int, "n_max"),
]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qclab",
        description="spectral-geometry laboratory for 4D quasi-contact structures",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in HANDLERS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, help="JSON config file (flags override)")
        p.add_argument("--out", type=str, default="qclab_out")
        for flag, typ, _ in _FLAGS:
            p.add_argument(flag, type=typ, default=None)
        if name == "flow":
            p.add_argument("--x", type=float, nargs=4, default=None)
    return parser


def config_from_args(args):
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    for _, __, key in _FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            config[key] = val
    if getattr(args, "x", None) is not None:
        config["x"] = list(args.x)
    config["subcommand"] = args.subcommand
    return config


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        validate_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        handler = HANDLERS[args.subcommand]
        results, tables = handler(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QclabError as exc:
        print(f"compute error [{args.subcommand}]: {exc}", file=sys.stderr)
        return 3
    doc = _document(args.subcommand, config, results)
    path = _write_outputs(args.out, args.subcommand, doc, tables)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
