"""JSON model descriptors.

A descriptor is a JSON object with a ``type`` tag plus parameters; file
references (reaction matrices as dense CSV, edge lists as two-column CSV,
patch tables as CSV with columns z, a, s) are resolved relative to the
descriptor's base directory.
"""

import json
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from ..rules import constant_rule, linear_rule
from .spreading import SpreadingModel, mean_field, spreading_rule
from .domany_kinzel import DomanyKinzel, dk_rule
from .hanski import HanskiModel, equidistributed, hanski_rule
from .graphdyn import GraphDynModel, complete_host, graph_rule
from .random_rules import random_product_rule


def _load_csv_matrix(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _attachment(spec):
    kind = spec.get("attachment", "logistic")
    scale = float(spec.get("attachment_scale", 0.5))
    if kind == "constant":
        return (lambda y: np.full_like(np.asarray(y, dtype=np.float64), scale),
                lambda y: np.zeros_like(np.asarray(y, dtype=np.float64)),
                (0.0, 0.0, 0.0))
    if kind == "linear":
        return (lambda y: scale * np.asarray(y, dtype=np.float64),
                lambda y: np.full_like(np.asarray(y, dtype=np.float64), scale),
                (scale, 0.0, 0.0))
    if kind == "quadratic":
        # f(y) = scale * y^2 on [0,1]
        return (lambda y: scale * np.asarray(y, dtype=np.float64) ** 2,
                lambda y: 2.0 * scale * np.asarray(y, dtype=np.float64),
                (2.0 * scale, 2.0 * scale, 0.0))
    raise SchemaError(f"unknown attachment curve {kind!r}")


def model_from_descriptor(desc, base_dir="."):
    """Build (model_object, rule) from a descriptor dict."""
    base = Path(base_dir)
    kind = desc.get("type")
    if kind == "constant":
        n = int(desc["n"])
        return None, constant_rule(n, float(desc["c"]))
    if kind == "linear":
        A = _load_csv_matrix(base / desc["A_csv"]) if "A_csv" in desc \
            else np.asarray(desc["A"], dtype=np.float64)
        return None, linear_rule(A)
    if kind == "spreading":
        if "R_csv" in desc:
            R = _load_csv_matrix(base / desc["R_csv"])
            model = SpreadingModel(R_matrix=R, mu=float(desc["mu"]),
                                   reinfection=bool(desc.get("reinfection", False)),
                                   domain_form=desc.get("domain_form", "product"))
        elif "rbar" in desc:
            model = mean_field(int(desc["n"]), float(desc["rbar"]), float(desc["mu"]),
                               reinfection=bool(desc.get("reinfection", False)))
        else:
            raise SchemaError("spreading descriptor needs R_csv or rbar")
        return model, spreading_rule(model)
    if kind == "domany_kinzel":
        model = DomanyKinzel(n=int(desc["n"]), q1=float(desc["q1"]),
                             q2=float(desc["q2"]), p0=float(desc.get("p0", 0.5)))
        return model, dk_rule(model, iid_start=bool(desc.get("iid_start", True)))
    if kind == "hanski":
        if "patch_csv" in desc:
            tbl = _load_csv_matrix(base / desc["patch_csv"])
            z, a_col, s_col = tbl[:, 0], tbl[:, 1], tbl[:, 2]
            model = HanskiModel(z=z,
                                a=lambda zz: np.interp(zz, z, a_col),
                                s=lambda zz: np.interp(zz, z, s_col),
                                kernel_scale=float(desc.get("kernel_scale", 0.25)))
        else:
            model = equidistributed(int(desc["n"]),
                                    kernel_scale=float(desc.get("kernel_scale", 0.25)))
        return model, hanski_rule(model)
    if kind == "graph":
        f, fp, sups = _attachment(desc)
        q = float(desc["q"])
        if "edges_csv" in desc:
            edges = _load_csv_matrix(base / desc["edges_csv"]).astype(int)
            model = GraphDynModel(host_edges=edges, v=int(desc["v"]), q=q,
                                  f=f, f_prime=fp, f_derivative_sups=sups)
        else:
            model = complete_host(int(desc["v"]), q, f, f_prime=fp,
                                  f_derivative_sups=sups)
        return model, graph_rule(model)
    if kind == "random_product":
        return None, random_product_rule(int(desc["n"]), int(desc.get("seed", 0)),
                                         strength=float(desc.get("strength", 0.8)))
    raise SchemaError(f"unknown model type {kind!r}")


def load_descriptor(path):
    path = Path(path)
    with open(path) as fh:
        desc = json.load(fh)
    return model_from_descriptor(desc, base_dir=path.parent)
