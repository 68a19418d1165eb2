"""Run-configuration files: TOML in, small TOML/CSV reports out.

Sections: [geometry], [model], [bulk_potential], [surface_potential],
[coupling], [forcing] (sub-tables f, f_gamma), [initial] (sub-tables
u0, phi0) and [run]. See README for the full key list; unknown keys are
rejected so typos fail fast.
"""

import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import graphs, model
from .errors import InputError
from .grid import StripGrid


def _take(table, section, keys_defaults):
    extra = set(table) - set(keys_defaults)
    if extra:
        raise InputError(f"[{section}] has unknown keys: {sorted(extra)}")
    return {k: table.get(k, d) for k, d in keys_defaults.items()}


def _parse_graph(table, section):
    kind = table.get("kind", "polynomial")
    if kind == "polynomial":
        return graphs.polynomial_graph(table.get("power", 3),
                                       table.get("coeff", 1.0))
    if kind == "obstacle":
        return graphs.obstacle_graph(table.get("lower", -1.0),
                                     table.get("upper", 1.0))
    if kind == "custom":
        for key in ("beta", "beta_hat"):
            if key not in table:
                raise InputError(
                    f"[{section}] custom graphs need '{key} = \"module:function\"'")
        return graphs.custom_graph(
            model.load_callable(table["beta"]),
            model.load_callable(table["beta_hat"]),
            table.get("lower", -math.inf), table.get("upper", math.inf))
    raise InputError(f"[{section}] unknown graph kind {kind!r}")


def _parse_potential(table, section):
    vals = _take(table, section, {
        "kind": "polynomial", "power": 3, "coeff": 1.0,
        "lower": -1.0, "upper": 1.0, "beta": None, "beta_hat": None,
        "pi": "linear", "pi_slope": -1.0, "pi_clip": 10.0,
    })
    graph = _parse_graph({k: v for k, v in vals.items() if v is not None
                          and k in ("kind", "power", "coeff", "lower",
                                    "upper", "beta", "beta_hat")}, section)
    if vals["pi"] == "zero":
        return model.zero_pi_split(graph)
    if vals["pi"] == "linear":
        return model.linear_pi_split(graph, vals["pi_slope"], vals["pi_clip"])
    raise InputError(f"[{section}] unknown pi kind {vals['pi']!r}")


def _parse_coupling(table):
    vals = _take(table, "coupling", {
        "kind": "affine", "alpha": 1.0, "eta": 0.0,
        "scale": 1.0, "offset": 0.0,
    })
    if vals["kind"] == "affine":
        return model.affine_coupling(vals["alpha"], vals["eta"])
    if vals["kind"] == "tanh":
        return model.tanh_coupling(vals["scale"], vals["offset"])
    raise InputError(f"[coupling] unknown kind {vals['kind']!r}")


def _parse_data(table, section, default_kind="zero"):
    vals = _take(table, section, {
        "kind": default_kind, "value": 0.0, "amplitude": 0.1, "offset": 0.0,
        "mode_x": 1, "mode_y": 1, "decay": 0.0, "modes": 3, "seed": 0,
        "path": "",
    })
    return model.DataSpec(**vals)


def parse_config(doc, base_dir=None):
    """Build a ModelConfig from a parsed TOML mapping (not yet validated)."""
    known = {"geometry", "model", "bulk_potential", "surface_potential",
             "coupling", "forcing", "initial", "run"}
    extra = set(doc) - known
    if extra:
        raise InputError(f"unknown config sections: {sorted(extra)}")

    geo = _take(doc.get("geometry", {}), "geometry",
                {"geometry": "strip", "nx": 64, "ny": 64, "lx": 1.0})
    grid = StripGrid(nx=int(geo["nx"]), ny=int(geo["ny"]),
                     lx=float(geo["lx"]), geometry=geo["geometry"])

    mdl = _take(doc.get("model", {}), "model",
                {"K": None, "eps": 0.0, "viscosity": 0.0})

    bulk = _parse_potential(doc.get("bulk_potential", {}), "bulk_potential")
    surf = _parse_potential(doc.get("surface_potential", {}), "surface_potential")
    coupling = _parse_coupling(doc.get("coupling", {}))

    forcing = doc.get("forcing", {})
    extra = set(forcing) - {"f", "f_gamma"}
    if extra:
        raise InputError(f"[forcing] has unknown sub-tables: {sorted(extra)}")
    f = _parse_data(forcing.get("f", {}), "forcing.f")
    f_gamma = _parse_data(forcing.get("f_gamma", {}), "forcing.f_gamma")

    initial = doc.get("initial", {})
    extra = set(initial) - {"u0", "phi0"}
    if extra:
        raise InputError(f"[initial] has unknown sub-tables: {sorted(extra)}")
    u0 = _parse_data(initial.get("u0", {}), "initial.u0")
    phi0 = _parse_data(initial.get("phi0", {}), "initial.phi0",
                       default_kind="trace")

    if base_dir is not None:
        for name, spec in (("u0", u0), ("phi0", phi0), ("f", f),
                           ("f_gamma", f_gamma)):
            if spec.kind == "csv" and spec.path and not Path(spec.path).is_absolute():
                patched = spec.__class__(**{**spec.__dict__,
                                            "path": str(Path(base_dir) / spec.path)})
                if name == "u0":
                    u0 = patched
                elif name == "phi0":
                    phi0 = patched
                elif name == "f":
                    f = patched
                else:
                    f_gamma = patched

    run = _take(doc.get("run", {}), "run",
                {"dt": None, "t_final": 0.1, "sample_every": 1, "mode": "robin"})

    config = model.ModelConfig(
        grid=grid, bulk=bulk, surface=surf, coupling=coupling,
        dt=1.0,  # placeholder, replaced below once the heuristic can run
        t_final=float(run["t_final"]),
        mode=run["mode"],
        K=None if mdl["K"] is None else float(mdl["K"]),
        eps=float(mdl["eps"]), viscosity=float(mdl["viscosity"]),
        sample_every=int(run["sample_every"]),
        f=f, f_gamma=f_gamma, u0=u0, phi0=phi0)
    dt = run["dt"] if run["dt"] is not None else model.suggested_dt(config)
    return config.with_updates(dt=float(dt))


def load_config(path):
    """Read and parse a TOML run configuration (not yet validated)."""
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return parse_config(doc, base_dir=path.parent)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        if isinstance(v, float) and not math.isfinite(v):
            return f'"{v!r}"'  # TOML has no inf/nan literals
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    raise InputError(f"cannot serialize {type(v).__name__} to TOML")


def write_toml(path, sections):
    """Write a {section: {key: scalar-or-list}} mapping as TOML."""
    lines = []
    for section, table in sections.items():
        lines.append(f"[{section}]")
        for key, value in table.items():
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    Path(path).write_text("\n".join(lines))
