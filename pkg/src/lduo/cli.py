"""Command line entry point: declarative jobs over the solver.

``lduo <subcommand> --config FILE --out DIR [--threads N] [--dump-lattice]``

Subcommands: validate, decompose, equilibrate, dynamics, bathcoords,
spectra2d.  The config is a sectioned key=value text file (JSON is also
accepted); unset keys fall back to the benchmark defaults.  Every run
writes a manifest with the config hash, the mode table, the lattice
size, wall time, and a content hash for each artifact, so identical
config and code produce byte-identical outputs.

Exit codes: 0 success, 2 config/validation error, 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bath import BathModel, LorentzDrudeBath, UndampedBath, a0, build_bath_model
from .errors import BlowUpError, DomainError, LduoError
from .hierarchy import TruncationRule, build, dump_lattice
from .observables import (MomentRecorder, Projection, residual_series)
from .propagator import (Generator, SystemModel, equilibrate,
                         make_initial_state, propagate, save_checkpoint)
from .spectroscopy import GridSpec, response3, spectrum2d
from .units import beta_from_temperature

JOB_KINDS = ("decompose", "equilibrate", "dynamics", "bathcoords", "spectra2d")

#: benchmark parameter set used wherever the config is silent
DEFAULTS = {
    "system": {"omega_eg": 3000.0},
    "baths": {
        "ld": {"eta": 50.0, "lambda": 100.0, "convention": "cot"},
        "uo": {"lambda_reorg": 0.5, "omega_uo": 500.0},
    },
    "thermo": {"temperature": 300.0},
    "hierarchy": {"gamma_max_factor": 10.0, "depth_cap": 12, "K": "auto",
                  "gamma_max": None, "tail_tol": 1e-9},
    "integrator": {"dt": 0.5, "t_final": 1000.0, "stride": 10},
    "job": {"kind": None},
    "dynamics": {"initial_state": "superposition"},
    "bathcoords": {"orders": [1, 2], "initial_state": "superposition"},
    "equilibrate": {"dt": 1.0, "max_time": 2000.0, "tol": 1e-10},
    "spectra2d": {"T_list": [0.0, 50.0, 100.0], "N1": 64, "N3": 64,
                  "dt1": 4.0, "dt3": 4.0, "window": "none",
                  "phase_flip_sign": -1, "rotating_frame": True,
                  "pad_factor": 4, "dump_response": False},
}


# -- config parsing -----------------------------------------------------------

def _parse_scalar(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except (json.JSONDecodeError, ValueError):
        return text


def parse_config_text(text: str) -> dict:
    """Sectioned key=value format; section headers may be dotted."""
    out: dict = {}
    section: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = out
            for part in line[1:-1].strip().split("."):
                section = section.setdefault(part, {})
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key = value, "
                              f"got {raw!r}")
        if section is None:
            raise DomainError(f"config line {lineno}: key outside a [section]")
        key, val = line.split("=", 1)
        section[key.strip()] = _parse_scalar(val)
    return out


def load_config(path) -> dict:
    text = Path(path).read_text()
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        return json.loads(text)
    return parse_config_text(text)


class ConfigErrors(LduoError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


def _merge_defaults(user: dict) -> tuple[dict, list[str]]:
    """Overlay the user config on the defaults, rejecting unknown keys.

    When the user provides a ``baths`` section, only the baths it lists
    are active; otherwise both benchmark baths apply.
    """
    errors: list[str] = []
    resolved = json.loads(json.dumps(DEFAULTS))  # deep copy
    if "baths" in user:
        resolved["baths"] = {}
        for name, blk in (user.get("baths") or {}).items():
            if name not in DEFAULTS["baths"]:
                errors.append(f"baths.{name}: unknown bath kind")
                continue
            resolved["baths"][name] = dict(DEFAULTS["baths"][name])
    for sec, blk in user.items():
        if sec not in resolved:
            errors.append(f"{sec}: unknown section")
            continue
        if not isinstance(blk, dict):
            errors.append(f"{sec}: expected a section, got {blk!r}")
            continue
        for key, val in blk.items():
            if sec == "baths":
                for k2, v2 in (val or {}).items():
                    if key in resolved["baths"] and k2 in resolved["baths"][key]:
                        resolved["baths"][key][k2] = v2
                    elif key in resolved["baths"]:
                        errors.append(f"baths.{key}.{k2}: unknown key")
                continue
            if key not in resolved[sec]:
                errors.append(f"{sec}.{key}: unknown key")
                continue
            resolved[sec][key] = val
    return resolved, errors


def validate_config(user: dict, job_kind: str | None = None):
    """Full schema + physics validation; all problems reported at once.

    Returns the resolved config dict.  Raises :class:`ConfigErrors`.
    """
    resolved, errors = _merge_defaults(user)

    def check(cond, msg):
        if not cond:
            errors.append(msg)

    sysc = resolved["system"]
    check(isinstance(sysc["omega_eg"], (int, float))
          and math.isfinite(sysc["omega_eg"]) and sysc["omega_eg"] > 0,
          "system.omega_eg: must be a positive frequency in cm^-1")

    baths = resolved["baths"]
    check(len(baths) >= 1, "baths: at least one of ld, uo must be configured")
    if "ld" in baths:
        check(isinstance(baths["ld"]["eta"], (int, float))
              and baths["ld"]["eta"] >= 0, "baths.ld.eta: must be >= 0")
        check(isinstance(baths["ld"]["lambda"], (int, float))
              and baths["ld"]["lambda"] > 0, "baths.ld.lambda: must be > 0")
        check(baths["ld"]["convention"] in ("cot", "coth"),
              "baths.ld.convention: must be 'cot' or 'coth'")
    if "uo" in baths:
        check(isinstance(baths["uo"]["lambda_reorg"], (int, float))
              and baths["uo"]["lambda_reorg"] >= 0,
              "baths.uo.lambda_reorg: must be >= 0")
        check(isinstance(baths["uo"]["omega_uo"], (int, float))
              and baths["uo"]["omega_uo"] > 0,
              "baths.uo.omega_uo: must be > 0")

    th = resolved["thermo"]
    check(isinstance(th["temperature"], (int, float)) and th["temperature"] > 0,
          "thermo.temperature: must be > 0 K")

    hi = resolved["hierarchy"]
    check(hi["K"] == "auto" or (isinstance(hi["K"], int) and hi["K"] >= 0),
          "hierarchy.K: must be 'auto' or a non-negative integer")
    check(isinstance(hi["depth_cap"], int) and hi["depth_cap"] >= 1,
          "hierarchy.depth_cap: must be an integer >= 1")
    check(hi["gamma_max_factor"] > 0, "hierarchy.gamma_max_factor: must be > 0")
    if hi["gamma_max"] is not None:
        check(isinstance(hi["gamma_max"], (int, float)) and hi["gamma_max"] > 0,
              "hierarchy.gamma_max: must be > 0 when given")

    it = resolved["integrator"]
    check(it["dt"] > 0, "integrator.dt: must be > 0")
    check(it["t_final"] > 0, "integrator.t_final: must be > 0")
    check(isinstance(it["stride"], int) and it["stride"] >= 1,
          "integrator.stride: must be an integer >= 1")

    if resolved["job"]["kind"] is not None:
        check(resolved["job"]["kind"] in JOB_KINDS,
              f"job.kind: must be one of {JOB_KINDS}")
        if job_kind is not None and resolved["job"]["kind"] != job_kind:
            errors.append(f"job.kind: config says {resolved['job']['kind']!r} "
                          f"but the subcommand is {job_kind!r}")

    sp = resolved["spectra2d"]
    for nname in ("N1", "N3"):
        n = sp[nname]
        check(isinstance(n, int) and n >= 2 and (n & (n - 1)) == 0,
              f"spectra2d.{nname}: must be a power of two")
    check(sp["phase_flip_sign"] in (-1, 0, 1),
          "spectra2d.phase_flip_sign: must be -1, 0 or +1")
    check(sp["window"] in ("none", "hann"),
          "spectra2d.window: must be 'none' or 'hann'")
    check(isinstance(sp["T_list"], list) and all(
        isinstance(t, (int, float)) and t >= 0 for t in sp["T_list"]),
          "spectra2d.T_list: must be a list of non-negative waiting times")

    for job in ("dynamics", "bathcoords"):
        check(resolved[job]["initial_state"] in ("ground", "excited",
                                                 "superposition"),
              f"{job}.initial_state: must be ground/excited/superposition")
    check(all(isinstance(o, int) and o >= 1
              for o in resolved["bathcoords"]["orders"]),
          "bathcoords.orders: must be integers >= 1")

    # physics diagnostics that should surface before a run
    if "ld" in baths and not errors:
        kT = beta_from_temperature(th["temperature"]).kT_wavenumber
        x = 0.5 * baths["ld"]["lambda"] / kT
        if baths["ld"]["convention"] == "cot" and abs(math.sin(x)) < 1e-6:
            errors.append(
                f"thermo/baths.ld: beta*hbar*Lambda/2 = {x:.6g} sits on a cot "
                "pole of the Drude coefficient (degenerate temperature)")

    if errors:
        raise ConfigErrors(errors)
    return resolved


# -- model assembly -----------------------------------------------------------

def build_models(cfg: dict):
    """(thermo, SystemModel, {'full'/'ld'/'uo': BathModel}) per the config."""
    thermo = beta_from_temperature(cfg["thermo"]["temperature"])
    system = SystemModel(omega_eg=cfg["system"]["omega_eg"])
    ld = uo = None
    if "ld" in cfg["baths"]:
        ld = LorentzDrudeBath(eta=cfg["baths"]["ld"]["eta"],
                              lambda_cutoff=cfg["baths"]["ld"]["lambda"])
    if "uo" in cfg["baths"]:
        uo = UndampedBath(lambda_reorg=cfg["baths"]["uo"]["lambda_reorg"],
                          omega_uo=cfg["baths"]["uo"]["omega_uo"])
    kw = dict(K=cfg["hierarchy"]["K"], tail_tol=cfg["hierarchy"]["tail_tol"])
    if ld is not None:
        kw["ld_convention"] = cfg["baths"]["ld"]["convention"]
    models = {"full": build_bath_model(thermo, ld=ld, uo=uo, **kw)}
    if ld is not None and uo is not None:
        models["ld"] = build_bath_model(thermo, ld=ld, **kw)
        models["uo"] = build_bath_model(thermo, uo=uo, K=0, tail_tol=kw["tail_tol"])
    return thermo, system, models


def resolve_rule(cfg: dict, model: BathModel) -> TruncationRule:
    hi = cfg["hierarchy"]
    if hi["gamma_max"] is not None:
        gamma = float(hi["gamma_max"])
    elif model.uo is not None:
        gamma = hi["gamma_max_factor"] * model.uo.omega_uo
    else:
        gamma = hi["gamma_max_factor"] * model.ld.lambda_cutoff
    return TruncationRule(gamma_max=gamma, depth_cap=hi["depth_cap"])


# -- artifact writing -----------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def write_matrix_csv(path: Path, matrix: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Artifacts:
    def __init__(self, out_dir: Path):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p)
        return p

    def manifest(self, cfg: dict, job: str, extra: dict, started: float):
        doc = {
            "schema": 1,
            "code_version": __version__,
            "job": job,
            "config_sha256": hashlib.sha256(
                json.dumps(cfg, sort_keys=True).encode()).hexdigest(),
            "config": cfg,
            "wall_time_s": round(time.perf_counter() - started, 3),
            "outputs": {p.name: _sha256(p) for p in self.files},
        }
        doc.update(extra)
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)


def mode_table(model: BathModel) -> list[dict]:
    return [{
        "origin": m.origin.value,
        "matsubara_index": m.matsubara_index,
        "coefficient_re": m.coefficient.real,
        "coefficient_im": m.coefficient.imag,
        "frequency_re": m.frequency.real,
        "frequency_im": m.frequency.imag,
    } for m in model.modes]


def lattice_info(space) -> dict:
    return {"nodes": space.n_indices, "axes": space.n_axes,
            "max_tier": space.max_tier,
            "gamma_max": space.rule.gamma_max,
            "depth_cap": space.rule.depth_cap}


# -- jobs -------------------------------------------------------------------------

MOMENT_HEADER = ["t_fs", "projection", "order",
                 "re_gg", "im_gg", "re_ge", "im_ge",
                 "re_eg", "im_eg", "re_ee", "im_ee"]


def _moment_rows(series):
    rows = []
    for t, v in zip(series.times, series.values):
        rows.append([float(t), series.projection.value, series.order,
                     v[0, 0].real, v[0, 0].imag, v[0, 1].real, v[0, 1].imag,
                     v[1, 0].real, v[1, 0].imag, v[1, 1].real, v[1, 1].imag])
    return rows


def job_decompose(cfg, art: Artifacts, threads, dump):
    _, _, models = build_models(cfg)
    model = models["full"]
    rows = [[m["origin"], m["matsubara_index"], m["coefficient_re"],
             m["coefficient_im"], m["frequency_re"], m["frequency_im"]]
            for m in mode_table(model)]
    write_csv(art.path("modes.csv"),
              ["origin", "matsubara_index", "coefficient_re_cm-2",
               "coefficient_im_cm-2", "frequency_re_cm-1", "frequency_im_cm-1"],
              rows)
    val = a0(model)
    return {"modes": mode_table(model),
            "a0_re": val.real, "a0_im": val.imag,
            "tail_coefficient": model.tail_coefficient,
            "matsubara_count": model.matsubara_count}


def _generator(cfg, model, system, frame_shift=0.0):
    space = build(model, resolve_rule(cfg, model))
    return space, Generator(model, space, system, frame_shift=frame_shift)


def job_equilibrate(cfg, art: Artifacts, threads, dump):
    _, system, models = build_models(cfg)
    space, gen = _generator(cfg, models["full"], system)
    eq = equilibrate(gen, dt=cfg["equilibrate"]["dt"],
                     max_time=cfg["equilibrate"]["max_time"],
                     tol=cfg["equilibrate"]["tol"])
    save_checkpoint(art.path("equilibrium.json"), gen, eq)
    residual = float(np.max(np.abs(gen.rhs(eq.ados))))
    if dump:
        dump_lattice(space, art.path("lattice.jsonl"))
    return {"lattice": lattice_info(space), "modes": mode_table(models["full"]),
            "equilibration_residual": residual, "equilibration_time_fs": eq.time}


def job_dynamics(cfg, art: Artifacts, threads, dump):
    _, system, models = build_models(cfg)
    space, gen = _generator(cfg, models["full"], system)
    st = make_initial_state(space, cfg["dynamics"]["initial_state"])
    rows = []

    def obs(s):
        r = s.rho
        rows.append([s.time, r[0, 0].real, r[0, 0].imag, r[0, 1].real,
                     r[0, 1].imag, r[1, 0].real, r[1, 0].imag, r[1, 1].real,
                     r[1, 1].imag, np.trace(r).real])

    propagate(gen, st, cfg["integrator"]["t_final"], cfg["integrator"]["dt"],
              observers=[obs], stride=cfg["integrator"]["stride"])
    write_csv(art.path("dynamics.csv"),
              ["t_fs", "re_gg", "im_gg", "re_ge", "im_ge", "re_eg", "im_eg",
               "re_ee", "im_ee", "trace_re"], rows)
    if dump:
        dump_lattice(space, art.path("lattice.jsonl"))
    return {"lattice": lattice_info(space), "modes": mode_table(models["full"])}


def job_bathcoords(cfg, art: Artifacts, threads, dump):
    """Three-model protocol on a shared grid: full, LD-only, UO-only,
    with projected moments and the non-additivity residual."""
    _, system, models = build_models(cfg)
    orders = tuple(cfg["bathcoords"]["orders"])
    init = cfg["bathcoords"]["initial_state"]
    dt, t_final = cfg["integrator"]["dt"], cfg["integrator"]["t_final"]
    stride = cfg["integrator"]["stride"]
    # one admission rule, derived from the full model, shared by all runs
    rule = resolve_rule(cfg, models["full"])

    def run(model, projections):
        space = build(model, rule)
        gen = Generator(model, space, system)
        st = make_initial_state(space, init)
        rec = MomentRecorder(space, model, orders=orders,
                             projections=projections)
        propagate(gen, st, t_final, dt, observers=[rec], stride=stride)
        return space, rec

    two_baths = "ld" in models and "uo" in models
    projections = ((Projection.FULL, Projection.UO_ONLY, Projection.LD_ONLY)
                   if two_baths else (Projection.FULL,))
    space_full, rec_full = run(models["full"], projections)
    info = {"lattice": lattice_info(space_full),
            "modes": mode_table(models["full"])}
    names = {Projection.FULL: "full", Projection.UO_ONLY: "uoproj",
             Projection.LD_ONLY: "ldproj"}
    for order in orders:
        for proj in projections:
            s = rec_full.series(order, proj)
            write_csv(art.path(f"bathcoords_{names[proj]}_{order}.csv"),
                      MOMENT_HEADER, _moment_rows(s))
    if two_baths:
        _, rec_ld = run(models["ld"], (Projection.FULL,))
        _, rec_uo = run(models["uo"], (Projection.FULL,))
        residual_norms = {}
        for order in orders:
            for tag, rec in (("ldiso", rec_ld), ("uoiso", rec_uo)):
                s = rec.series(order, Projection.FULL)
                write_csv(art.path(f"bathcoords_{tag}_{order}.csv"),
                          MOMENT_HEADER, _moment_rows(s))
            res, sup, integral = residual_series(
                rec_full.series(order, Projection.FULL),
                rec_ld.series(order, Projection.FULL),
                rec_uo.series(order, Projection.FULL))
            write_csv(art.path(f"residual_{order}.csv"), MOMENT_HEADER,
                      _moment_rows(res))
            residual_norms[str(order)] = {"sup": sup, "integral": integral}
        info["residual_norms"] = residual_norms
    if dump:
        dump_lattice(space_full, art.path("lattice.jsonl"))
    return info


def job_spectra2d(cfg, art: Artifacts, threads, dump):
    _, system, models = build_models(cfg)
    sp = cfg["spectra2d"]
    frame = system.omega_eg if sp["rotating_frame"] else 0.0
    model = models["full"]
    space = build(model, resolve_rule(cfg, model))
    gen = Generator(model, space, system, frame_shift=frame)
    eq = equilibrate(gen, dt=cfg["equilibrate"]["dt"],
                     max_time=cfg["equilibrate"]["max_time"],
                     tol=cfg["equilibrate"]["tol"])
    axes_doc = {"frame_shift_cm": frame, "waiting_times_fs": sp["T_list"]}
    for T in sp["T_list"]:
        grid = GridSpec(n1=sp["N1"], dt1=sp["dt1"], n3=sp["N3"], dt3=sp["dt3"],
                        waiting_time=float(T),
                        dt_integrator=cfg["integrator"]["dt"],
                        frame_shift=frame)
        resp = response3(gen, eq, grid, threads=threads)
        spec = spectrum2d(resp, pad_factor=sp["pad_factor"],
                          window=sp["window"],
                          phase_flip_sign=sp["phase_flip_sign"])
        tag = f"T{int(round(T))}"
        write_matrix_csv(art.path(f"spectrum_{tag}.csv"), spec.amplitude)
        write_matrix_csv(art.path(f"absorptive_{tag}.csv"), spec.absorptive)
        if sp["dump_response"]:
            write_matrix_csv(art.path(f"response_rephasing_re_{tag}.csv"),
                             resp.rephasing.real)
            write_matrix_csv(art.path(f"response_rephasing_im_{tag}.csv"),
                             resp.rephasing.imag)
            write_matrix_csv(art.path(f"response_nonrephasing_re_{tag}.csv"),
                             resp.nonrephasing.real)
            write_matrix_csv(art.path(f"response_nonrephasing_im_{tag}.csv"),
                             resp.nonrephasing.imag)
        axes_doc[tag] = {
            "omega_tau_cm": [float(v) for v in spec.omega_tau],
            "omega_t_cm": [float(v) for v in spec.omega_t],
            "rows": "omega_tau", "cols": "omega_t",
        }
    with open(art.path("axes.json"), "w") as fh:
        json.dump(axes_doc, fh, indent=1, sort_keys=True)
    if dump:
        dump_lattice(space, art.path("lattice.jsonl"))
    return {"lattice": lattice_info(space), "modes": mode_table(model)}


JOB_RUNNERS = {
    "decompose": job_decompose,
    "equilibrate": job_equilibrate,
    "dynamics": job_dynamics,
    "bathcoords": job_bathcoords,
    "spectra2d": job_spectra2d,
}


def run_job(kind: str, cfg: dict, out_dir, threads: int = 1,
            dump_lattice_flag: bool = False) -> int:
    started = time.perf_counter()
    art = Artifacts(Path(out_dir))
    extra = JOB_RUNNERS[kind](cfg, art, threads, dump_lattice_flag)
    art.manifest(cfg, kind, extra, started)
    return 0


def estimate_lattice(cfg: dict) -> dict:
    _, _, models = build_models(cfg)
    space = build(models["full"], resolve_rule(cfg, models["full"]))
    info = lattice_info(space)
    # modes that can never be excited under the admission rule are inert;
    # their memory is carried only by the Markovian tail
    inert = [i for i, w in enumerate(space.axis_weights)
             if w > space.rule.gamma_max]
    info["inert_axes"] = inert
    return info


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lduo",
        description="Two-bath hierarchy solver: decomposition, dynamics, "
                    "bath-coordinate moments and 2D spectra jobs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in ("validate",) + JOB_KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True)
        if kind != "validate":
            p.add_argument("--out", required=True)
            p.add_argument("--threads", type=int, default=1)
            p.add_argument("--dump-lattice", action="store_true")
    args = parser.parse_args(argv)

    try:
        user_cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file {args.config} not found", file=sys.stderr)
        return 2
    except (DomainError, json.JSONDecodeError) as exc:
        print(f"error: cannot parse config: {exc}", file=sys.stderr)
        return 2

    job_kind = None if args.command == "validate" else args.command
    try:
        cfg = validate_config(user_cfg, job_kind=job_kind)
    except ConfigErrors as exc:
        for err in exc.errors:
            print(f"invalid: {err}", file=sys.stderr)
        return 2

    if args.command == "validate":
        try:
            info = estimate_lattice(cfg)
        except LduoError as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return 2
        print("valid")
        print(f"lattice estimate: {info['nodes']} nodes over {info['axes']} "
              f"axes (gamma_max {info['gamma_max']:g} cm^-1, depth "
              f"{info['depth_cap']})")
        if info["inert_axes"]:
            print(f"note: axes {info['inert_axes']} admit no excitation "
                  "under the current gamma_max")
        return 0

    try:
        return run_job(args.command, cfg, args.out, threads=args.threads,
                       dump_lattice_flag=args.dump_lattice)
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return 3
    except LduoError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
