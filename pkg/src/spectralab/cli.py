"""Command line front end.

Every subcommand evaluates one capability and emits rows with a fixed
shape: inputs, value, error_bound, method, formula_id, plus extra keys
where a capability produces more than one number.  Output is JSON (an
array of objects, floats printed with 17 significant digits, keys
sorted) or CSV with the same keys as columns.  Runs are deterministic:
no timestamps, no environment leakage, grid points processed in index
order even when SPECTRALAB_THREADS enables a thread pool.

Batch jobs live in INI files with sections [job], [model],
[model.plus], [model.minus], [grid], [fit], [output]; values are JSON
fragments so matrices and lists survive a round trip.  `spectralab run
job.ini` executes one, `spectralab fit --job job.ini` is the same for
sweep-and-fit jobs.  Errors exit 2 (bad inputs) or 3 (numerical
failure) with a one-line JSON diagnostic on stderr.

error_bound is 0.0 where the underlying routine certifies its result
internally instead of returning an explicit bound.
"""

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import SpectralabError, ValidationError
from .heatdet import heat_det, heat_det_leading
from .invariants import (BoundaryData, GeometryData, ObliqueSymbol,
                         ggs_a1, ggs_gamma, predicted_trace_coeffs)
from .magnetic import (MagneticModel, b2_leading, h_tensor, landau_check,
                       u0_kernel)
from .mellin import a_q, expansion_fit, log_det, zeta
from .models import (BC, Circle, DiracCircle, FlatTorus, Interval, Landau,
                     Sphere2, dirac_eigenvalues, eigenvalues)
from .nonlaplace import (ConstantSymbol, a0_density, a2_density,
                         dirichlet_a1_density, dirichlet_psi)
from .relative import (TracePair, bogolyubov, combined_trace_X,
                       combined_trace_Y, relative_phi, relative_psi,
                       theorem1_leading_fit)
from .traces import (classical_trace, quantum_trace, relativistic_trace,
                     theta_trace)
from .weyl import (WeylModel, WeylPair, convolution_kernel, d_matrix,
                   omega_single, trace_density)
from ._quad import legendre_rule

__all__ = ["JobSpec", "run", "sweep_and_fit", "main"]


# ---------------------------------------------------------------------------
# deterministic rendering

def _jtext(v):
    """Serialize one JSON value; floats always as %.17g."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not math.isfinite(x):
            raise ValidationError("refusing to serialize a non-finite value")
        return f"{x:.17g}"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        inner = ", ".join(f"{json.dumps(k)}: {_jtext(v[k])}"
                          for k in sorted(v))
        return "{" + inner + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_jtext(x) for x in v) + "]"
    if v is None:
        return "null"
    raise ValidationError(f"cannot serialize {type(v).__name__}")


def render_json(rows):
    if not rows:
        return "[]\n"
    body = ",\n".join("  " + _jtext(r) for r in rows)
    return "[\n" + body + "\n]\n"


_CANON = ("inputs", "value", "error_bound", "method", "formula_id")


def render_csv(rows):
    seen = set()
    for r in rows:
        seen.update(r)
    cols = [c for c in _CANON if c in seen]
    cols += sorted(seen - set(_CANON))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        cells = []
        for c in cols:
            if c not in r:
                cells.append("")
                continue
            v = r[c]
            if isinstance(v, str):
                cells.append(v)
            else:
                cells.append(_jtext(v))
        writer.writerow(cells)
    return buf.getvalue()


def _row(inputs, value, bound, method, fid, **extra):
    d = {"inputs": inputs, "value": float(value),
         "error_bound": float(bound), "method": method, "formula_id": fid}
    d.update(extra)
    return d


def _split_complex(z):
    """Real part plus a value_im extra only when the imag part matters."""
    z = complex(z)
    if abs(z.imag) <= 1e-13 * max(1.0, abs(z.real)):
        return float(z.real), {}
    return float(z.real), {"value_im": float(z.imag)}


# ---------------------------------------------------------------------------
# parallel grid evaluation

def _thread_count():
    raw = os.environ.get("SPECTRALAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError("SPECTRALAB_THREADS must be an integer")


def _pmap(fn, items):
    """Map preserving index order, threaded when requested."""
    items = list(items)
    workers = _thread_count()
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# parameter plumbing

def _jload(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"bad JSON for {what}: {exc}")


def _need(p, key):
    if p.get(key) is None:
        raise ValidationError(f"missing required parameter {key!r}")
    return p[key]


def _grid(p, key, positive=True):
    v = _need(p, key)
    if isinstance(v, (int, float)):
        v = [v]
    vals = [float(x) for x in v]
    if not vals:
        raise ValidationError(f"grid {key!r} must not be empty")
    if positive and any(x <= 0 for x in vals):
        raise ValidationError(f"grid {key!r} must be strictly positive")
    return vals


def _build_model(desc):
    """Model from a plain descriptor dict with a 'type' key."""
    if not isinstance(desc, dict):
        raise ValidationError("model descriptor must be a mapping")
    d = dict(desc)
    kind = d.pop("type", None)
    if kind == "circle":
        return Circle(radius=float(d.pop("radius", 1.0)),
                      twist=float(d.pop("twist", 0.0)),
                      mass2=float(d.pop("mass2", 0.0)))
    if kind == "torus":
        g = np.asarray(d.pop("metric"), dtype=float)
        tw = d.pop("twist", 0.0)
        if np.ndim(tw) == 0:
            tw = np.full(g.shape[0], float(tw))
        return FlatTorus(g, np.asarray(tw, dtype=float),
                         float(d.pop("mass2", 0.0)))
    if kind == "interval":
        left = BC(str(d.pop("bc_left", "dirichlet")),
                  s=float(d.pop("s_left", 0.0)))
        right = BC(str(d.pop("bc_right", "dirichlet")),
                   s=float(d.pop("s_right", 0.0)))
        return Interval(float(d.pop("length", 1.0)), left, right)
    if kind == "sphere":
        return Sphere2(radius=float(d.pop("radius", 1.0)))
    if kind == "landau":
        return Landau(float(d.pop("field")), float(d.pop("mass2", 0.0)))
    if kind == "dirac-circle":
        return DiracCircle(float(d.pop("frame", 1.0)),
                           float(d.pop("twist", 0.0)))
    raise ValidationError(f"unknown model type {kind!r}")


def _model_descriptor(p):
    """Descriptor from flat CLI flags; only flags the user set survive."""
    kind = _need(p, "model")
    desc = {"type": kind}
    for key in ("radius", "twist", "mass2", "length", "bc_left", "bc_right",
                "s_left", "s_right", "field", "frame"):
        if p.get(key) is not None:
            desc[key] = p[key]
    if p.get("metric") is not None:
        desc["metric"] = p["metric"]
        if isinstance(p.get("twist"), str):
            desc["twist"] = _jload(p["twist"], "--twist")
    return desc


def _model_from_params(p):
    if isinstance(p.get("model"), dict):
        return _build_model(p["model"])
    desc = _model_descriptor(p)
    if desc["type"] == "torus" and isinstance(desc.get("twist"), str):
        desc["twist"] = _jload(desc["twist"], "--twist")
    return _build_model(desc)


def _pair_from_params(p):
    plus = _build_model(_need(p, "plus"))
    minus = _build_model(_need(p, "minus"))
    return TracePair(plus, minus, mass=float(p.get("mass") or 0.0))


def _is_flat(model):
    return isinstance(model, (Circle, FlatTorus))


# ---------------------------------------------------------------------------
# handlers; each takes a params dict and returns a list of rows

def cmd_spectrum(p):
    model = _model_from_params(p)
    cutoff = float(_need(p, "cutoff"))
    if isinstance(model, DiracCircle):
        spec = dirac_eigenvalues(model, cutoff)
    else:
        spec = eigenvalues(model, cutoff)
    rows = []
    for i, (lam, mult) in enumerate(zip(spec.lambdas, spec.mults)):
        rows.append(_row({"index": i}, lam, 0.0, "enumeration",
                         "spectrum-counting", multiplicity=float(mult)))
    return rows


def cmd_trace(p):
    model = _model_from_params(p)
    ts = _grid(p, "t")
    tol = float(p.get("tol") or 1e-9)
    cutoff = p.get("cutoff")
    if _is_flat(model) and cutoff is None:
        def one(t):
            return _row({"t": t}, theta_trace(model, t), 0.0,
                        "poisson-dual", "theta-dual-sum")
    else:
        if cutoff is None:
            cutoff = 50.0 / min(ts) + getattr(model, "mass2", 0.0)
        spec = eigenvalues(model, float(cutoff))

        def one(t):
            value, bound = classical_trace(spec, t, tol=tol)
            return _row({"t": t}, value, bound, "direct-sum",
                        "heat-trace-sum")
    return _pmap(one, ts)


def cmd_rtrace(p):
    model = _model_from_params(p)
    betas = _grid(p, "beta")
    method = p.get("method") or "direct"
    tol = float(p.get("tol") or 1e-10)
    cutoff = p.get("cutoff")
    if cutoff is None:
        cutoff = (50.0 / min(betas)) ** 2 + getattr(model, "mass2", 0.0)
    spec = eigenvalues(model, float(cutoff))

    def one(beta):
        value = relativistic_trace(spec, beta, method=method, tol=tol)
        return _row({"beta": beta}, value, tol * abs(value), method,
                    "relativistic-trace")
    return _pmap(one, betas)


def cmd_qtrace(p):
    model = _model_from_params(p)
    betas = _grid(p, "beta")
    mu = float(p.get("mu") or 0.0)
    statistics = p.get("statistics") or "bose"
    method = p.get("method") or "direct"
    tol = float(p.get("tol") or 1e-9)
    cutoff = p.get("cutoff")
    if cutoff is None:
        cutoff = (abs(mu) + 50.0 / min(betas)) ** 2 \
            + getattr(model, "mass2", 0.0)
    spec = eigenvalues(model, float(cutoff))

    def one(beta):
        value = quantum_trace(spec, beta, mu, statistics, method=method,
                              tol=tol)
        return _row({"beta": beta, "mu": mu, "statistics": statistics},
                    value, tol * abs(value), method,
                    f"quantum-{statistics}")
    return _pmap(one, betas)


def cmd_aq(p):
    model = _model_from_params(p)
    qs = _grid(p, "q", positive=False)
    order = p.get("series_order")

    def one(q):
        res = a_q(model, q, series_order=order)
        value, extra = _split_complex(res.value)
        return _row({"q": q}, value, res.error, "mellin-split",
                    "heat-coefficient", split_point=float(res.split_point),
                    **extra)
    return _pmap(one, qs)


def cmd_zeta(p):
    model = _model_from_params(p)
    svals = _grid(p, "s", positive=False)
    shift = float(p.get("lambda_shift") or 0.0)
    exclude = bool(p.get("exclude_zero"))
    method = p.get("method") or "auto"

    def one(s):
        value, extra = _split_complex(
            zeta(model, s, lambda_shift=shift, exclude_zero=exclude,
                 method=method))
        return _row({"exclude_zero": exclude, "lambda_shift": shift,
                     "s": s}, value, 0.0, method, "zeta-value", **extra)
    return _pmap(one, svals)


def cmd_logdet(p):
    model = _model_from_params(p)
    shift = float(p.get("lambda_shift") or 0.0)
    exclude = bool(p.get("exclude_zero"))
    step = float(p.get("step") or 1e-4)
    value = log_det(model, lambda_shift=shift, exclude_zero=exclude,
                    step=step)
    return [_row({"exclude_zero": exclude, "lambda_shift": shift},
                 value, 0.0, "zeta-derivative", "zeta-log-det")]


def cmd_coeffs(p):
    comps = []
    for b in p.get("boundary") or []:
        comps.append(BoundaryData(vol=float(b["vol"]),
                                  tr_Pi=float(b.get("tr_pi", 0.0)),
                                  int_K=float(b.get("int_k", 0.0)),
                                  int_trPiS=float(b.get("int_tr_pi_s", 0.0)),
                                  kind=str(b.get("kind", "Mixed"))))
    geom = GeometryData(int(_need(p, "n")), int(p.get("fiber") or 1),
                        float(_need(p, "vol")),
                        int_R=float(p.get("int_r") or 0.0),
                        int_trQ=float(p.get("int_trq") or 0.0),
                        boundary_components=tuple(comps),
                        sigma0_vol=float(p.get("sigma0_vol") or 0.0),
                        zaremba_alpha=int(p.get("zaremba_alpha") or -1))
    series = predicted_trace_coeffs(geom)
    pref = (4.0 * math.pi) ** (-geom.n / 2.0)
    rows = []
    for k in sorted(series.raw):
        rows.append(_row({"k": k, "power": (k - geom.n) / 2.0},
                         pref * series.raw[k], 0.0, "closed-form",
                         "boundary-heat-coefficients",
                         bare=float(series.raw[k])))
    return rows


def _complex_blob(p, base, what):
    re = p.get(f"{base}_re")
    im = p.get(f"{base}_im")
    if re is None and im is None:
        return None
    re = np.asarray(re, dtype=float) if re is not None else None
    im = np.asarray(im, dtype=float) if im is not None else None
    if re is None:
        re = np.zeros_like(im)
    if im is None:
        im = np.zeros_like(re)
    if re.shape != im.shape:
        raise ValidationError(f"{what}: real and imag shapes differ")
    return re + 1j * im


def cmd_ggs_gamma(p):
    gammas = _complex_blob(p, "gammas", "--gammas-re/--gammas-im")
    if gammas is None:
        raise ValidationError("need --gammas-re (and optionally "
                              "--gammas-im)")
    gammas = np.asarray(gammas)
    if gammas.ndim != 3:
        raise ValidationError("Gammas must be a list of square matrices")
    bmetric = p.get("boundary_metric")
    if bmetric is not None:
        bmetric = np.asarray(bmetric, dtype=float)
    pi = p.get("pi")
    if pi is not None:
        pi = np.asarray(pi, dtype=float)
    n = gammas.shape[0] + 1
    symbol = ObliqueSymbol(n, gammas, boundary_metric=bmetric, Pi=pi)
    method = p.get("method") or "quadrature"
    gamma = ggs_gamma(symbol, method=method)
    rows = [_row({"n": n, "fiber": int(gammas.shape[1])}, gamma, 0.0,
                 method, "oblique-gamma")]
    if p.get("boundary_vol") is not None:
        tr_pi = float(np.trace(pi).real) if pi is not None else 0.0
        a1 = ggs_a1(symbol, gammas.shape[1], float(p["boundary_vol"]),
                    tr_pi)
        rows.append(_row({"boundary_vol": float(p["boundary_vol"]),
                          "tr_pi": tr_pi}, a1, 0.0, method, "oblique-a1"))
    return rows


def cmd_nonlaplace(p):
    op = p.get("op") or "a0"
    a = _complex_blob(p, "a", "--a-re/--a-im")
    if a is None:
        raise ValidationError("need --a-re (and optionally --a-im)")
    q = _complex_blob(p, "q", "--q-re/--q-im")
    n = int(_need(p, "n"))
    fib = int(p.get("fiber") or 1)
    sym = ConstantSymbol(n, fib, np.asarray(a).reshape(n, n, fib, fib),
                         Q=q)
    if op == "a0":
        return [_row({"n": n, "fiber": fib}, a0_density(sym), 0.0,
                     "simplex-quadrature", "interior-a0")]
    if op == "a2":
        return [_row({"n": n, "fiber": fib}, a2_density(sym), 0.0,
                     "simplex-quadrature", "interior-a2")]
    if op == "dirichlet-a1":
        order = int(p.get("order") or 40)
        value = dirichlet_a1_density(sym, order=order)
        return [_row({"n": n, "fiber": fib, "order": order}, value, 0.0,
                     "contour-quadrature", "boundary-a1")]
    if op == "psi":
        xi = np.asarray(_need(p, "xi"), dtype=float)
        length = float(p.get("contour_length") or 45.0)
        value = dirichlet_psi(sym, xi, contour_length=length)
        return [_row({"contour_length": length, "xi": list(map(float, xi))},
                     value, 0.0, "contour-quadrature", "resolvent-psi")]
    raise ValidationError(f"unknown nonlaplace op {op!r}")


def cmd_magnetic(p):
    op = p.get("op") or "landau"
    if op == "landau":
        field = float(_need(p, "field"))
        ts = _grid(p, "t")

        def one(t):
            diag, level, diff = landau_check(field, t)
            return _row({"field": field, "t": t}, diag, 0.0,
                        "closed-form", "landau-diagonal",
                        difference=float(diff), landau_sum=float(level))
        return _pmap(one, ts)
    f = np.asarray(_need(p, "f_matrix"), dtype=float)
    model = MagneticModel(f)
    if op == "u0":
        t = _grid(p, "t")[0]
        x = np.asarray(p.get("x") or np.zeros(model.n), dtype=float)
        xp = np.asarray(p.get("x_prime") or np.zeros(model.n), dtype=float)
        mat = u0_kernel(model, t, x, xp)
        value, extra = _split_complex(mat[0, 0])
        return [_row({"t": t, "x": list(map(float, x)),
                      "x_prime": list(map(float, xp))}, value, 0.0,
                     "closed-form", "magnetic-kernel", **extra)]
    if op == "h":
        t = _grid(p, "t")[0]
        mat = np.asarray(h_tensor(model, t), dtype=float)
        rows = []
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                rows.append(_row({"col": j, "row": i, "t": t},
                                 mat[i, j], 0.0, "closed-form",
                                 "magnetic-h-tensor"))
        return rows
    if op == "b2":
        # t = 0 is the defining point for the curvature coefficient
        t = _grid(p, "t", positive=False)[0] if p.get("t") is not None \
            else 0.0
        r = float(p.get("scalar_r") or 0.0)
        value = b2_leading(model, r, t)
        return [_row({"scalar_r": r, "t": t}, value, 0.0, "closed-form",
                     "magnetic-b2")]
    raise ValidationError(f"unknown magnetic op {op!r}")


def cmd_relative(p):
    pair = _pair_from_params(p)
    op = p.get("op") or "psi"
    fns = {"psi": (relative_psi, "relative-psi"),
           "phi": (relative_phi, "relative-phi"),
           "x": (combined_trace_X, "combined-x"),
           "y": (combined_trace_Y, "combined-y")}
    if op == "fit":
        t = _grid(p, "t")[0]
        s = _grid(p, "s")[0]
        eps = _grid(p, "eps")
        fitted, predicted = theorem1_leading_fit(pair, t, s, eps)
        gap = abs(fitted - predicted) / max(abs(predicted), 1e-300)
        return [_row({"s": s, "t": t}, fitted, 0.0, "log-log-fit",
                     "leading-order-fit", predicted=float(predicted),
                     relative_gap=float(gap))]
    if op not in fns:
        raise ValidationError(f"unknown relative op {op!r}")
    fn, fid = fns[op]
    ts = _grid(p, "t")
    ss = _grid(p, "s")
    if len(ss) == 1:
        ss = ss * len(ts)
    if len(ts) == 1:
        ts = ts * len(ss)
    if len(ts) != len(ss):
        raise ValidationError("t and s grids must align")

    def one(pt):
        t, s = pt
        return _row({"s": s, "t": t}, fn(pair, t, s), 0.0, "mode-sum", fid)
    return _pmap(one, list(zip(ts, ss)))


def cmd_bogolyubov(p):
    pair = _pair_from_params(p)
    betas = _grid(p, "beta")
    statistics = p.get("statistics") or "bose"
    m = p.get("m")
    m = float(m) if m is not None else None

    def one(beta):
        spectral = bogolyubov(pair, beta, m=m, statistics=statistics,
                              method="spectral")
        kernel = bogolyubov(pair, beta, m=m, statistics=statistics,
                            method="kernel")
        return _row({"beta": beta, "statistics": statistics}, spectral,
                    0.0, "spectral+kernel", f"bogolyubov-{statistics}",
                    discrepancy=abs(spectral - kernel),
                    value_kernel=float(kernel))
    return _pmap(one, betas)


def _heatdet_cutoff(model, t):
    if isinstance(model, Circle):
        g, n = model.radius ** -2.0, 1
    else:
        g, n = model._gmin, model.n
    if n == 1:
        return int(math.ceil(math.sqrt(35.0 / (t * g)))) + 2
    return int(math.ceil(math.sqrt(41.0 / (t * g)))) + 1


def cmd_heatdet(p):
    op = p.get("op") or "k"
    if op == "leading":
        n = int(_need(p, "n"))
        fib = int(p.get("fiber") or 1)
        vol = float(_need(p, "vol"))
        value = heat_det_leading(n, fib, vol)
        return [_row({"fiber": fib, "n": n, "vol": vol}, value, 0.0,
                     "closed-form", "heatdet-leading",
                     power=-n * (n + 0.5))]
    if op != "k":
        raise ValidationError(f"unknown heatdet op {op!r}")
    model = _model_from_params(p)
    ts = _grid(p, "t")
    budget = int(p.get("budget") or 4_000_000)
    cutoff = p.get("cutoff")

    def one(t):
        c = int(cutoff) if cutoff is not None else _heatdet_cutoff(model, t)
        return _row({"cutoff": c, "t": t}, heat_det(model, t, c,
                                                    budget=budget),
                    0.0, "mode-sum", "heatdet-mode-sum")
    return _pmap(one, ts)


def _weyl_member(p, side):
    n = int(p.get("n") or 2)
    b = p.get("b")
    metric = p.get(f"metric_{side}")
    curv = p.get(f"curv_{side}")
    g = np.asarray(metric, dtype=float) if metric is not None else np.eye(n)
    if curv is not None:
        r = np.asarray(curv, dtype=float)
    elif b is not None:
        r = np.zeros((n, n))
        for i in range(0, n - 1, 2):
            r[i, i + 1] = float(b)
            r[i + 1, i] = -float(b)
    else:
        r = None
    return WeylModel(n, g, curv=r)


def _numeric_convolution(pair, t, s, x, xp, order=80):
    """Gauss-Legendre product-grid evaluation of the defining integral."""
    n = pair.plus.n
    dp = d_matrix(pair.plus, t)
    dm = d_matrix(pair.minus, s)
    om = omega_single(pair.plus, t) * omega_single(pair.minus, s)
    rp = pair.plus.curv if pair.plus.curv is not None else np.zeros((n, n))
    rm = pair.minus.curv if pair.minus.curv is not None else np.zeros((n, n))
    d = dp + dm
    center = np.linalg.solve(d, dp @ x + dm @ xp)
    spread = math.sqrt(2.0 / float(np.linalg.eigvalsh(d)[0]))
    half = 9.0 * spread + float(np.abs(center).max())
    nodes, wts = legendre_rule(order)
    axes = [center[i] + half * nodes for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    ys = np.stack([m.ravel() for m in mesh], axis=1)
    wgrid = np.meshgrid(*([wts * half] * n), indexing="ij")
    weight = np.ones(ys.shape[0])
    for w in wgrid:
        weight = weight * w.ravel()
    dxy = x[None, :] - ys
    dyx = ys - xp[None, :]
    quad = (np.einsum("ij,jk,ik->i", dxy, dp, dxy)
            + np.einsum("ij,jk,ik->i", dyx, dm, dyx))
    phase = -0.5j * (ys @ (rp @ x)) + 0.5j * (ys @ (rm @ xp))
    vals = np.exp(-0.25 * quad + phase)
    total = (4.0 * math.pi) ** (-n) * om * np.sum(weight * vals)
    return complex(total)


def cmd_weyl(p):
    op = p.get("op") or "convolve"
    if op == "omega":
        model = _weyl_member(p, "plus")
        ts = _grid(p, "t")

        def one(t):
            return _row({"t": t}, omega_single(model, t), 0.0,
                        "closed-form", "weyl-omega")
        return _pmap(one, ts)
    if op == "dmatrix":
        model = _weyl_member(p, "plus")
        t = _grid(p, "t")[0]
        mat = d_matrix(model, t)
        rows = []
        for i in range(model.n):
            for j in range(model.n):
                rows.append(_row({"col": j, "row": i, "t": t},
                                 mat[i, j], 0.0, "closed-form",
                                 "weyl-d-matrix"))
        return rows
    pair = WeylPair(_weyl_member(p, "plus"), _weyl_member(p, "minus"))
    t = _grid(p, "t")[0]
    s = _grid(p, "s")[0]
    if op == "density":
        mode = p.get("mode") or "auto"
        value = trace_density(pair, t, s, mode=mode)
        return [_row({"mode": mode, "s": s, "t": t}, value, 0.0,
                     "closed-form", "weyl-trace-density")]
    if op != "convolve":
        raise ValidationError(f"unknown weyl op {op!r}")
    n = pair.plus.n
    x = np.asarray(p.get("x") or np.zeros(n), dtype=float)
    xp = np.asarray(p.get("x_prime") or np.zeros(n), dtype=float)
    value, extra = _split_complex(convolution_kernel(pair, t, s, x, xp))
    if p.get("check_quadrature"):
        closed = complex(value, extra.get("value_im", 0.0))
        numeric = _numeric_convolution(pair, t, s, x, xp)
        extra["quadrature_value"] = float(numeric.real)
        extra["discrepancy"] = abs(closed - numeric)
    return [_row({"s": s, "t": t, "x": list(map(float, x)),
                  "x_prime": list(map(float, xp))}, value, 0.0,
                 "closed-form", "weyl-convolution", **extra)]


def _fit_rows(series, inputs):
    rows = []
    for term in sorted(series.terms,
                       key=lambda tm: (tm.power, tm.log_power)):
        rows.append(_row(dict(inputs, power=term.power,
                              log_power=term.log_power),
                         term.coefficient, 0.0, "svd-least-squares",
                         "series-fit", condition=float(series.condition),
                         residual=float(series.residual)))
    return rows


def sweep_and_fit(p):
    """Sweep a grid, fit the sampled values to a power-log template."""
    target = p.get("target") or "theta"
    template = [(float(a), int(b)) for a, b in (p.get("template") or [])]
    if target == "theorem1":
        pair = _pair_from_params(p)
        t = _grid(p, "t")[0]
        s = _grid(p, "s")[0]
        eps = _grid(p, "eps")
        fitted, predicted = theorem1_leading_fit(pair, t, s, eps)
        gap = abs(fitted - predicted) / max(abs(predicted), 1e-300)
        return [_row({"s": s, "t": t}, fitted, 0.0, "log-log-fit",
                     "leading-order-fit", predicted=float(predicted),
                     relative_gap=float(gap))]
    if not template:
        raise ValidationError("fit needs a template of (power, log_power)")
    ts = _grid(p, "t")
    if target == "theta":
        model = _model_from_params(p)
        if _is_flat(model) and p.get("cutoff") is None:
            samples = _pmap(lambda t: (t, theta_trace(model, t)), ts)
        else:
            cutoff = p.get("cutoff")
            if cutoff is None:
                cutoff = 50.0 / min(ts) + getattr(model, "mass2", 0.0)
            spec = eigenvalues(model, float(cutoff))
            samples = _pmap(
                lambda t: (t, classical_trace(spec, t, tol=1e-9)[0]), ts)
    elif target == "heatdet":
        model = _model_from_params(p)
        budget = int(p.get("budget") or 4_000_000)

        def one(t):
            c = (int(p["cutoff"]) if p.get("cutoff") is not None
                 else _heatdet_cutoff(model, t))
            return (t, heat_det(model, t, c, budget=budget))
        samples = _pmap(one, ts)
    else:
        raise ValidationError(f"unknown fit target {target!r}")
    series = expansion_fit(samples, template)
    return _fit_rows(series, {"points": len(ts), "target": target})


# ---------------------------------------------------------------------------
# job files

_GRID_KEYS = ("t", "s", "beta", "eps")


class JobSpec:
    """Typed view of one INI job file; values are JSON fragments."""

    def __init__(self, sections):
        self.sections = {str(name): dict(vals)
                         for name, vals in dict(sections).items()}
        if "job" not in self.sections:
            raise ValidationError("job file needs a [job] section")

    def __eq__(self, other):
        return (isinstance(other, JobSpec)
                and self.sections == other.sections)

    def __repr__(self):
        return f"JobSpec(command={self.command!r})"

    @property
    def command(self):
        cmd = self.sections["job"].get("command")
        if not cmd:
            raise ValidationError("job file needs command = ... in [job]")
        return str(cmd)

    def validate(self):
        if self.command not in _HANDLERS:
            raise ValidationError(f"unknown command {self.command!r}")
        tol = self.sections["job"].get("tolerance")
        if tol is not None and float(tol) < 1e-14:
            raise ValidationError("tolerance must be at least 1e-14")
        for key, val in self.sections.get("grid", {}).items():
            if key not in _GRID_KEYS:
                raise ValidationError(f"unknown grid key {key!r}")
            vals = val if isinstance(val, list) else [val]
            if not vals:
                raise ValidationError(f"grid {key!r} must not be empty")
            if any(float(x) <= 0 for x in vals):
                raise ValidationError(
                    f"grid {key!r} must be strictly positive")
        fmt = self.sections.get("output", {}).get("format")
        if fmt is not None and fmt not in ("json", "csv"):
            raise ValidationError(f"unknown output format {fmt!r}")
        return self

    def to_ini(self):
        cp = configparser.ConfigParser()
        for name in sorted(self.sections):
            cp[name] = {k: json.dumps(v, sort_keys=True)
                        for k, v in sorted(self.sections[name].items())}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text):
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"bad job file: {exc}")
        sections = {}
        for name in cp.sections():
            vals = {}
            for key, raw in cp[name].items():
                vals[key] = _jload(raw, f"[{name}] {key}")
            sections[name] = vals
        return cls(sections)


def _params_from_job(job):
    p = {}
    for key, val in job.sections["job"].items():
        if key == "command":
            continue
        p["tol" if key == "tolerance" else key] = val
    if "model" in job.sections:
        p["model"] = job.sections["model"]
    if "model.plus" in job.sections:
        p["plus"] = job.sections["model.plus"]
    if "model.minus" in job.sections:
        p["minus"] = job.sections["model.minus"]
    for key, val in job.sections.get("grid", {}).items():
        p[key] = val
    for key, val in job.sections.get("fit", {}).items():
        p[key] = val
    out = job.sections.get("output", {})
    p["output"] = out.get("path")
    p["format"] = out.get("format") or "json"
    return p


def run(job):
    """Execute one JobSpec and write its artifact; returns the rows."""
    job.validate()
    p = _params_from_job(job)
    rows = _HANDLERS[job.command](p)
    _emit(rows, p)
    return rows


# ---------------------------------------------------------------------------
# argparse front end

_HANDLERS = {
    "spectrum": cmd_spectrum,
    "trace": cmd_trace,
    "rtrace": cmd_rtrace,
    "qtrace": cmd_qtrace,
    "aq": cmd_aq,
    "zeta": cmd_zeta,
    "logdet": cmd_logdet,
    "coeffs": cmd_coeffs,
    "ggs-gamma": cmd_ggs_gamma,
    "nonlaplace": cmd_nonlaplace,
    "magnetic": cmd_magnetic,
    "relative": cmd_relative,
    "bogolyubov": cmd_bogolyubov,
    "heatdet": cmd_heatdet,
    "weyl": cmd_weyl,
    "fit": sweep_and_fit,
}


def _emit(rows, p):
    fmt = p.get("format") or "json"
    if fmt == "json":
        text = render_json(rows)
    elif fmt == "csv":
        text = render_csv(rows)
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    path = p.get("output")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_output_flags(sp):
    sp.add_argument("--output", help="write the artifact here instead of "
                    "stdout")
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def _add_model_flags(sp):
    sp.add_argument("--model", required=True,
                    choices=("circle", "torus", "interval", "sphere",
                             "landau", "dirac-circle"))
    sp.add_argument("--radius", type=float)
    sp.add_argument("--twist", help="scalar, or JSON list for torus")
    sp.add_argument("--mass2", type=float)
    sp.add_argument("--metric", help="JSON inverse metric for torus")
    sp.add_argument("--length", type=float)
    sp.add_argument("--bc-left", choices=("dirichlet", "neumann", "robin"))
    sp.add_argument("--bc-right", choices=("dirichlet", "neumann", "robin"))
    sp.add_argument("--s-left", type=float)
    sp.add_argument("--s-right", type=float)
    sp.add_argument("--field", type=float)
    sp.add_argument("--frame", type=float)


def _add_pair_flags(sp):
    sp.add_argument("--plus", required=True,
                    help="JSON model descriptor, e.g. "
                    '\'{"type": "circle", "radius": 1.0}\'')
    sp.add_argument("--minus", required=True, help="JSON model descriptor")
    sp.add_argument("--mass", type=float)


def _json_flag(ns, p, key, what):
    raw = getattr(ns, key, None)
    if raw is not None:
        p[key] = _jload(raw, what)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="spectralab",
        description="spectral traces, heat coefficients and determinant "
                    "diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="enumerate eigenvalues")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--cutoff", type=float, required=True)

    sp = sub.add_parser("trace", help="heat trace on a t grid")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--t", type=float, nargs="+", required=True)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--cutoff", type=float)

    sp = sub.add_parser("rtrace", help="relativistic trace on a beta grid")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--beta", type=float, nargs="+", required=True)
    sp.add_argument("--method", choices=("direct", "subordination"),
                    default="direct")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--cutoff", type=float)

    sp = sub.add_parser("qtrace", help="quantum statistics trace")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--beta", type=float, nargs="+", required=True)
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--statistics", choices=("bose", "fermi"),
                    default="bose")
    sp.add_argument("--method", choices=("direct", "kernel"),
                    default="direct")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--cutoff", type=float)

    sp = sub.add_parser("aq", help="heat expansion coefficients A_q")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--q", type=float, nargs="+", required=True)
    sp.add_argument("--series-order", type=int)

    sp = sub.add_parser("zeta", help="spectral zeta values")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--s", type=float, nargs="+", required=True)
    sp.add_argument("--lambda-shift", type=float)
    sp.add_argument("--exclude-zero", action="store_true")
    sp.add_argument("--method", choices=("auto", "mellin", "direct"),
                    default="auto")

    sp = sub.add_parser("logdet", help="zeta-regularized log determinant")
    _add_model_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--lambda-shift", type=float)
    sp.add_argument("--exclude-zero", action="store_true")
    sp.add_argument("--step", type=float)

    sp = sub.add_parser("coeffs", help="predicted boundary heat "
                        "coefficients")
    _add_output_flags(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--fiber", type=int)
    sp.add_argument("--vol", type=float, required=True)
    sp.add_argument("--int-r", type=float)
    sp.add_argument("--int-trq", type=float)
    sp.add_argument("--sigma0-vol", type=float)
    sp.add_argument("--zaremba-alpha", type=int)
    sp.add_argument("--boundary", help="JSON list of boundary components")

    sp = sub.add_parser("ggs-gamma", help="oblique boundary invariant")
    _add_output_flags(sp)
    sp.add_argument("--gammas-re", required=True,
                    help="JSON array of (n-1) square matrices")
    sp.add_argument("--gammas-im")
    sp.add_argument("--boundary-metric")
    sp.add_argument("--pi")
    sp.add_argument("--method",
                    choices=("quadrature", "commuting", "clifford"),
                    default="quadrature")
    sp.add_argument("--boundary-vol", type=float)

    sp = sub.add_parser("nonlaplace", help="densities for non-scalar "
                        "symbols")
    _add_output_flags(sp)
    sp.add_argument("op", nargs="?", choices=("a0", "a2", "dirichlet-a1",
                                               "psi"), default="a0")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--fiber", type=int)
    sp.add_argument("--a-re", required=True,
                    help="JSON (n, n, N, N) symbol coefficients")
    sp.add_argument("--a-im")
    sp.add_argument("--q-re")
    sp.add_argument("--q-im")
    sp.add_argument("--order", type=int)
    sp.add_argument("--xi", help="JSON boundary covector")
    sp.add_argument("--contour-length", type=float)

    sp = sub.add_parser("magnetic", help="uniform field kernels")
    _add_output_flags(sp)
    sp.add_argument("op", nargs="?", choices=("landau", "u0", "h", "b2"),
                    default="landau")
    sp.add_argument("--field", type=float)
    sp.add_argument("--t", type=float, nargs="+")
    sp.add_argument("--f-matrix", help="JSON antisymmetric field matrix")
    sp.add_argument("--x")
    sp.add_argument("--x-prime")
    sp.add_argument("--scalar-r", type=float)

    sp = sub.add_parser("relative", help="relative trace diagnostics")
    _add_pair_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("op", nargs="?", choices=("psi", "phi", "x", "y",
                                               "fit"), default="psi")
    sp.add_argument("--t", type=float, nargs="+", required=True)
    sp.add_argument("--s", type=float, nargs="+", required=True)
    sp.add_argument("--eps", type=float, nargs="+")

    sp = sub.add_parser("bogolyubov", help="free energy difference")
    _add_pair_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--beta", type=float, nargs="+", required=True)
    sp.add_argument("--m", type=float)
    sp.add_argument("--statistics", choices=("bose", "fermi"),
                    default="bose")

    sp = sub.add_parser("heatdet", help="determinant-line heat trace")
    _add_output_flags(sp)
    sp.add_argument("op", nargs="?", choices=("k", "leading"),
                    default="k")
    sp.add_argument("--model", choices=("circle", "torus"))
    sp.add_argument("--radius", type=float)
    sp.add_argument("--twist")
    sp.add_argument("--mass2", type=float)
    sp.add_argument("--metric")
    sp.add_argument("--t", type=float, nargs="+")
    sp.add_argument("--cutoff", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--fiber", type=int)
    sp.add_argument("--vol", type=float)

    sp = sub.add_parser("weyl", help="member kernels and their "
                        "convolution")
    _add_output_flags(sp)
    sp.add_argument("op", nargs="?", choices=("convolve", "density",
                                               "omega", "dmatrix"),
                    default="convolve")
    sp.add_argument("--n", type=int)
    sp.add_argument("--b", type=float,
                    help="shorthand: identity metrics, block rotation "
                    "curvature of this rate for both members")
    sp.add_argument("--metric-plus")
    sp.add_argument("--metric-minus")
    sp.add_argument("--curv-plus")
    sp.add_argument("--curv-minus")
    sp.add_argument("--t", type=float, nargs="+", required=True)
    sp.add_argument("--s", type=float, nargs="+")
    sp.add_argument("--x")
    sp.add_argument("--x-prime")
    sp.add_argument("--mode", choices=("auto", "full", "per_volume"),
                    default="auto")
    sp.add_argument("--check-quadrature", action="store_true")

    sp = sub.add_parser("fit", help="sweep a grid and fit an expansion")
    _add_output_flags(sp)
    sp.add_argument("--job", help="JobSpec INI file; overrides all flags")
    sp.add_argument("--target", choices=("theta", "heatdet", "theorem1"))
    sp.add_argument("--template",
                    help="JSON list of [power, log_power] pairs")
    sp.add_argument("--model-json", help="JSON model descriptor")
    sp.add_argument("--plus", help="JSON model descriptor")
    sp.add_argument("--minus", help="JSON model descriptor")
    sp.add_argument("--mass", type=float)
    sp.add_argument("--t", type=float, nargs="+")
    sp.add_argument("--s", type=float, nargs="+")
    sp.add_argument("--eps", type=float, nargs="+")
    sp.add_argument("--cutoff", type=float)
    sp.add_argument("--budget", type=int)

    sp = sub.add_parser("run", help="execute a JobSpec INI file")
    sp.add_argument("job", help="path to the INI job file")

    return ap


_JSON_FLAGS = {
    "metric": "--metric",
    "boundary": "--boundary",
    "gammas_re": "--gammas-re",
    "gammas_im": "--gammas-im",
    "boundary_metric": "--boundary-metric",
    "pi": "--pi",
    "a_re": "--a-re",
    "a_im": "--a-im",
    "q_re": "--q-re",
    "q_im": "--q-im",
    "xi": "--xi",
    "f_matrix": "--f-matrix",
    "x": "--x",
    "x_prime": "--x-prime",
    "plus": "--plus",
    "minus": "--minus",
    "metric_plus": "--metric-plus",
    "metric_minus": "--metric-minus",
    "curv_plus": "--curv-plus",
    "curv_minus": "--curv-minus",
    "template": "--template",
}


def _params_from_ns(ns):
    p = {}
    for key, val in vars(ns).items():
        if key in ("command", "func") or val is None:
            continue
        if key in _JSON_FLAGS:
            p[key] = _jload(val, _JSON_FLAGS[key])
        else:
            p[key] = val
    if p.pop("model_json", None) is not None:
        p["model"] = _jload(ns.model_json, "--model-json")
    if "twist" in p and isinstance(p["twist"], str) \
            and p.get("model") != "torus":
        p["twist"] = float(p["twist"])
    return p


def main(argv=None):
    ap = _build_parser()
    ns = ap.parse_args(argv)
    try:
        if ns.command == "run":
            run(JobSpec.from_ini(_read_text(ns.job)))
            return 0
        if ns.command == "fit" and getattr(ns, "job", None):
            job = JobSpec.from_ini(_read_text(ns.job))
            if job.command != "fit":
                raise ValidationError(
                    "fit --job expects a job with command = \"fit\"")
            run(job)
            return 0
        p = _params_from_ns(ns)
        rows = _HANDLERS[ns.command](p)
        _emit(rows, p)
        return 0
    except SpectralabError as exc:
        diag = {"error": type(exc).__name__, "exit_code": exc.exit_code,
                "message": str(exc)}
        sys.stderr.write(_jtext(diag) + "\n")
        return exc.exit_code


def _read_text(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read job file: {exc}")


if __name__ == "__main__":
    sys.exit(main())
