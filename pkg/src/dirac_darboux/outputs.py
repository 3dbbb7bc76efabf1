"""Artifact rendering and file writers for build and scatter.

All numeric cells use 17-significant-digit scientific notation so reruns
of the same config are byte-identical.  Rendering is separated from
writing: the service returns rendered text, the CLI persists it.  Files
are written to a temporary sibling first and moved in with os.replace.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .config import BuiltModel
from .errors import InvalidInputError


def fmt(x) -> str:
    return f"{float(x):.16e}"


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def render_potentials(model: BuiltModel) -> str:
    xs = model.grid.points()
    kind = model.kind
    if kind == "free2x2":
        header = ["x", "v", "w", "a_re", "a_im"]
        A = np.asarray(model.potential(xs))
        cols = [xs, np.real(A[:, 0, 0]), np.real(A[:, 1, 1]),
                np.real(A[:, 0, 1]), np.imag(A[:, 0, 1])]
    elif kind == "darboux2x2":
        header = ["x", "v_t", "w_t", "a_t_re", "a_t_im"]
        A = np.asarray(model.potential(xs))
        cols = [xs, np.real(A[:, 0, 0]), np.real(A[:, 1, 1]),
                np.real(A[:, 0, 1]), np.imag(A[:, 0, 1])]
    elif kind == "distortion":
        comp = model.detail.components
        header = ["x", "V_A", "V_B", "V_re", "V_im", "V_prime_re",
                  "V_prime_im", "W_A_re", "W_A_im", "W_B_re", "W_B_im",
                  "W_plus_re", "W_plus_im", "W_minus_re", "W_minus_im"]
        VA, VB = comp.V_A(xs), comp.V_B(xs)
        Vc, Vp = comp.V(xs), comp.V_prime(xs)
        WA, WB = comp.W_A(xs), comp.W_B(xs)
        Wp, Wm = comp.W_plus(xs), comp.W_minus(xs)
        cols = [xs, np.real(VA), np.real(VB), np.real(Vc), np.imag(Vc),
                np.real(Vp), np.imag(Vp), np.real(WA), np.imag(WA),
                np.real(WB), np.imag(WB), np.real(Wp), np.imag(Wp),
                np.real(Wm), np.imag(Wm)]
    elif kind == "spin_orbit":
        comp = model.detail.components
        header = ["x", "V", "Delta", "lambda"]
        cols = [xs, np.asarray(comp.V(xs)), np.asarray(comp.Delta(xs)),
                np.asarray(comp.lam(xs))]
    elif kind == "nonreducible":
        header = ["x", "v_t1", "w_t1", "a_t1_re", "a_t1_im",
                  "v_t2", "w_t2", "a_t2_re", "a_t2_im"]
        for i in (1, 2):
            for j in (1, 2):
                header += [f"upper_block_{i}{j}_re", f"upper_block_{i}{j}_im"]
        A = np.asarray(model.potential(xs))
        B = A[:, 0:2, 2:4]
        cols = [xs,
                np.real(A[:, 0, 0]), np.real(A[:, 1, 1]),
                np.real(A[:, 0, 1]), np.imag(A[:, 0, 1]),
                np.real(A[:, 2, 2]), np.real(A[:, 3, 3]),
                np.real(A[:, 2, 3]), np.imag(A[:, 2, 3])]
        for i in range(2):
            for j in range(2):
                cols += [np.real(B[:, i, j]), np.imag(B[:, i, j])]
    else:
        raise InvalidInputError(f"unknown kind {kind!r}")

    rows = ([fmt(c[i]) for c in cols] for i in range(len(xs)))
    return _csv_text(header, rows)


def render_bound_states(model: BuiltModel) -> str:
    xs = model.grid.points()
    if not model.bound_states:
        return _csv_text(["x"], [])
    header = ["x"] + [f"P_eps{k}" for k in
                      range(1, len(model.bound_states) + 1)]
    dens = [np.asarray(bs.density(xs), dtype=float)
            for bs in model.bound_states]
    rows = ([fmt(xs[i])] + [fmt(d[i]) for d in dens]
            for i in range(len(xs)))
    return _csv_text(header, rows)


def _matrix_to_json(m) -> object:
    if m is None:
        return None
    m = np.asarray(m, dtype=complex)
    return [[[float(np.real(m[i, j])), float(np.imag(m[i, j]))]
             for j in range(m.shape[1])] for i in range(m.shape[0])]


def render_model_json(model: BuiltModel) -> str:
    doc = {
        "kind": model.kind,
        "name": model.name,
        "config": json.loads(model.config.model_dump_json()),
        "bound_states": [
            {"energy": bs.energy, "norm": bs.norm,
             "residual": bs.residual, "finite_norm": bs.finite_norm}
            for bs in model.bound_states],
        "asymptotic_minus": _matrix_to_json(model.potential.asymptotic_minus),
        "asymptotic_plus": _matrix_to_json(model.potential.asymptotic_plus),
    }
    if model.kind == "darboux2x2":
        from .darboux2x2 import regularity
        seed = model.detail.seed
        doc["kappas"] = [seed.kappa1, seed.kappa2]
        if not seed.degenerate:
            rep = regularity(seed, grid=model.grid)
            doc["regularity"] = {
                "sufficient_condition_holds": rep.sufficient_condition_holds,
                "min_abs_D": rep.min_abs_D,
                "node_detected": rep.node_detected,
            }
        else:
            doc["regularity"] = {"degenerate": True}
    if model.kind == "nonreducible":
        doc["hermiticity_defect"] = model.detail.hermiticity_defect
        doc["offspan_max"] = model.detail.offspan_max
    if model.kind == "spin_orbit":
        doc["lambda_mode"] = model.detail.lambda_mode
        doc["kappa"] = model.detail.kappa
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _scalar_R(R):
    if np.isscalar(R) or np.asarray(R).ndim == 0:
        return complex(R)
    R = np.asarray(R)
    idx = np.unravel_index(np.argmax(np.abs(R)), R.shape)
    return complex(R[idx])


def _scalar_T(T):
    if np.isscalar(T) or np.asarray(T).ndim == 0:
        return abs(complex(T))
    T = np.asarray(T)
    return float(np.max(np.abs(np.diag(T))))


def render_scattering(entries) -> str:
    """One row per requested energy; skipped rows keep only the reason."""
    header = ["E", "Re_R", "Im_R", "abs_R", "abs_T", "flux_defect",
              "L_used", "status", "reason"]
    rows = []
    for entry in entries:
        if "skip_reason" in entry:
            rows.append([fmt(entry["energy"]), "", "", "", "", "", "",
                         "skip", entry["skip_reason"].replace(",", ";")])
        else:
            res = entry["result"]
            r = _scalar_R(res.R)
            rows.append([fmt(res.energy), fmt(r.real), fmt(r.imag),
                         fmt(abs(r)), fmt(_scalar_T(res.T)),
                         fmt(res.flux_defect), fmt(res.box_halfwidth),
                         "ok", ""])
    return _csv_text(header, rows)


def build_artifacts(model: BuiltModel) -> dict:
    return {
        "potentials.csv": render_potentials(model),
        "bound_states.csv": render_bound_states(model),
        "model.json": render_model_json(model),
    }
