"""End-to-end driver: integrals -> generator -> transformed Hamiltonian -> phases.

Stages run in a fixed order and each persists its artifacts to the output
directory, so later stages (or the ``verify`` subcommand) can be rerun from
disk.  A failing stage records its error in the bundle, writes the partial
bundle and re-raises with a ``stage`` attribute.
"""

from __future__ import annotations

import json
import logging
import platform
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy
import scipy.linalg

from . import __version__
from .config import RunConfig, dumps
from .dynamics import EvolutionPlan, auto_time, qpe_run, sector_prepare, split_G, trotter_error
from .errors import ConfigError, StructureError, SwrrstError, ValidationError
from .io import load_integrals
from .operators import FermionOperator, hamiltonian_from_tensors, normal_order, settings, to_dense
from .partition import OrbitalPartition, Sector, project, sector_census, to_number_polynomial
from .qubits import jw_map, locality_report, schedule_number_exponential
from .solver import GeneratorB, SolverOptions, apply_auxiliary, build_G, check_noncommutation, residual, solve_swrrst, split_h0_w

log = logging.getLogger(__name__)

__all__ = ["STAGES", "Pipeline", "ResultBundle", "emit_report", "run_pipeline"]

STAGES = ("load", "decompose", "auxiliary", "solve", "map", "evolve", "qpe", "verify")


@dataclass
class ResultBundle:
    provenance: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)
    census: dict | None = None
    auxiliary: dict | None = None
    solve: dict | None = None
    discarded: dict | None = None
    locality: dict | None = None
    spectra: dict | None = None
    trotter: dict | None = None
    histograms: dict | None = None
    verify: dict | None = None
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"


def _versions() -> dict:
    return {"swrrst": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _sorted_eigs(op: FermionOperator, n: int) -> np.ndarray:
    return np.linalg.eigvalsh(to_dense(op, n))


def _sector_ground(op: FermionOperator, n: int) -> dict[int, float]:
    mat = to_dense(op, n)
    occ = np.bitwise_count(np.arange(1 << n))
    out = {}
    for ne in range(n + 1):
        idx = np.flatnonzero(occ == ne)
        out[ne] = float(np.linalg.eigvalsh(mat[np.ix_(idx, idx)])[0])
    return out


class Pipeline:
    """Stateful runner; ``run(until)`` executes stages up to and including ``until``."""

    def __init__(self, config: RunConfig, out_dir: str | Path | None = None, stage_cache: bool = False):
        self.config = config
        self.out = Path(out_dir if out_dir is not None else config["output"]["dir"])
        self.stage_cache = stage_cache
        self.bundle = ResultBundle(provenance={"config_hash": config.hash, "config": config.to_dict(),
                                               "versions": _versions()})
        self.tensors = self.H = self.part = self.C = self.H_solve = None
        self.B = self.G = self.epsilon = None

    def _write(self, name: str, text: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)

    def _persist(self) -> None:
        self._write("bundle.json", self.bundle.to_json())

    def run(self, until: str = "verify") -> ResultBundle:
        if until not in STAGES:
            raise ValueError(f"unknown stage {until!r}")
        return self.run_stages(STAGES[: STAGES.index(until) + 1])

    def resume(self) -> ResultBundle:
        """Adopt a persisted bundle from the output directory when its config hash matches."""
        try:
            data = json.loads((self.out / "bundle.json").read_text())
        except (OSError, ValueError):
            return self.bundle
        if data.get("provenance", {}).get("config_hash") == self.config.hash:
            self.bundle = ResultBundle(**data)
        return self.bundle

    def run_stages(self, stages) -> ResultBundle:
        """Run the named stages in order; ``["verify"]`` alone re-checks persisted output."""
        for stage in stages:
            log.info("stage %s", stage)
            try:
                getattr(self, f"_stage_{stage}")()
            except SwrrstError as exc:
                self.bundle.errors.append({"stage": stage, "type": type(exc).__name__, "message": str(exc)})
                self._persist()
                exc.stage = stage
                raise
            if stage not in self.bundle.stages:
                self.bundle.stages.append(stage)
            self._persist()
        return self.bundle

    # stages

    def _stage_load(self):
        cfg = self.config
        pc = cfg["partition"]
        self.tensors = load_integrals(cfg.input_path, cfg["input"]["format"], pc["ordering"])
        self.H = hamiltonian_from_tensors(self.tensors)
        N = self.tensors.n_modes
        if N % 2:
            raise ValidationError(f"spin-orbital count {N} is odd")
        if pc["n"] is not None and pc["n"] != N // 2:
            raise ConfigError(f"partition.n = {pc['n']} but the integrals hold {N // 2} orbitals")
        if pc["k"] > N // 2:
            raise ConfigError(f"partition.k = {pc['k']} exceeds the {N // 2} orbitals")
        energies = pc["orbital_energies"]
        if energies is None:
            d = np.real(np.diag(self.tensors.h))
            energies = [(d[2 * i] + d[2 * i + 1]) / 2 for i in range(N // 2)]
        elif len(energies) != N // 2:
            raise ConfigError(f"partition.orbital_energies needs {N // 2} entries")
        self.part = OrbitalPartition.from_orbital_energies(N // 2 - pc["k"], energies,
                                                           ordering=tuple(pc["ordering"] or ()))
        self.epsilon = split_h0_w(self.H, self.part, cfg["h0"]["epsilon"]).epsilon
        self._write("H.txt", self.H.to_text())

    def _stage_decompose(self):
        self.bundle.census = sector_census(self.H, self.part)

    def _stage_auxiliary(self):
        aux = self.config["auxiliary"]
        self.H_solve = self.H
        if aux is None:
            return
        C = FermionOperator.zero()
        for t in aux["terms"]:
            ops = [(p - 1, True) for p in t["c"]] + [(p - 1, False) for p in t["a"]]
            C = C + normal_order(ops, complex(*t["coeff"]))
        self.C = C
        self.H_solve = apply_auxiliary(self.H, C, aux["rank"])
        self.bundle.auxiliary = {"terms": len(C), "census": sector_census(self.H_solve, self.part)}
        self._write("C.txt", C.to_text())

    def _options(self) -> SolverOptions:
        return SolverOptions(**self.config["solver"])

    def _stage_solve(self):
        cached = self.out / "B.txt"
        opts = self._options()
        prev = self._cached_solve()
        if prev is not None:
            log.info("solve: reusing cached generator from %s", cached)
            self.B = GeneratorB.from_operator(FermionOperator.from_text(cached.read_text()), opts.domain, opts.body_rank)
            self.bundle.solve = prev["solve"]
            self.bundle.discarded = prev["discarded"]
            self.G = FermionOperator.from_text((self.out / "G.txt").read_text())
            self._spectra()
            return
        self.B, report = solve_swrrst(self.H_solve, self.part, options=opts, epsilon=self.epsilon)
        nc = check_noncommutation(self.H_solve, self.B, self.part)
        self.bundle.solve = {
            **report.to_dict(),
            "noncommutation": {"flag": nc.noncommuting, "norm": nc.norm, "threshold": nc.threshold},
        }
        g = build_G(self.H_solve, self.B, self.part, opts.domain, self.config["g"]["tol"],
                    max_body_rank=self.config["g"]["max_body_rank"])
        self.G = g.G
        self.bundle.discarded = {"norm": g.discarded_norm, "series_rank": g.series_rank,
                                 "truncated_norm": g.truncated_norm}
        self._write("B.txt", self.B.op.to_text())
        self._write("G.txt", self.G.to_text())
        self._write("solve.json", dumps({"config_hash": self.config.hash, "solve": self.bundle.solve,
                                         "discarded": self.bundle.discarded}) + "\n")
        self._spectra()

    def _cached_solve(self) -> dict | None:
        if not self.stage_cache:
            return None
        try:
            prev = json.loads((self.out / "solve.json").read_text())
        except (OSError, ValueError):
            return None
        if prev.get("config_hash") != self.config.hash or not (self.out / "G.txt").exists():
            return None
        return prev

    def _spectra(self):
        N = self.part.n_modes
        if N > settings.dense_cap:
            self.bundle.spectra = {"skipped": f"{N} spin-orbitals exceed the dense cap"}
            return
        eh, eg = _sorted_eigs(self.H, N), _sorted_eigs(self.G, N)
        gh, gg = _sector_ground(self.H, N), _sector_ground(self.G, N)
        self.bundle.spectra = {
            "rows": [{"index": i, "eig_H": float(a), "eig_G": float(b), "abs_diff": float(abs(a - b))}
                     for i, (a, b) in enumerate(zip(eh, eg))],
            "max_abs_diff": float(np.max(np.abs(eh - eg))),
            "sector_ground": [{"n_e": ne, "H": gh[ne], "G": gg[ne], "abs_diff": abs(gh[ne] - gg[ne])}
                              for ne in range(N + 1)],
        }

    def _stage_map(self):
        N = self.part.n_modes
        P = jw_map(self.G, N)
        self._write("G_pauli.txt", P.to_text())
        self.bundle.locality = {"G": locality_report(self.G, self.part).to_dict(),
                                "H": locality_report(self.H_solve, self.part).to_dict()}
        try:
            parts = split_G(self.G, self.part)
        except StructureError:
            return
        sched = schedule_number_exponential(to_number_polynomial(parts.external), 1.0, N)
        self._write("external_schedule.txt", sched.to_text())

    def _time(self):
        t_auto, e_ref = auto_time(self.H, self.part.n_modes)
        t = self.config["evolution"]["t"]
        return (t_auto if t is None else t), e_ref

    def _parts(self, shift: float = 0.0):
        return split_G(self.G - shift * FermionOperator.identity(), self.part)

    def _stage_evolve(self):
        N = self.part.n_modes
        t, _ = self._time()
        try:
            parts = self._parts()
        except StructureError as exc:
            self.bundle.trotter = {"skipped": f"G is not of diagonal-external form: {exc}"}
            return
        rows = []
        for r in self.config["evolution"]["trotter_r"]:
            rows.append({"r": r, "error": trotter_error(parts, t, r, N),
                         "error_plain": trotter_error(parts, t, r, N, form="plain")})
        for a, b in zip(rows, rows[1:]):
            if a["error"] > 0 and b["error"] > 0:
                b["order"] = float(np.log(a["error"] / b["error"]) / np.log(b["r"] / a["r"]))
        self.bundle.trotter = {"t": t, "rows": rows}

    def _sectors(self) -> list[int]:
        s = self.config["evolution"]["sectors"]
        if s is not None:
            return list(s)
        ne = self.part.n_active_modes
        return [x for x in (ne - 1, ne, ne + 1) if 0 <= x <= self.part.n_modes]

    def _stage_qpe(self):
        ev = self.config["evolution"]
        N, m = self.part.n_modes, ev["m"]
        t, e_ref = self._time()
        I = FermionOperator.identity()
        Ud = scipy.linalg.expm(-1j * t * to_dense(self.H - e_ref * I, N))
        powers = [Ud]
        for _ in range(m - 1):
            powers.append(powers[-1] @ powers[-1])
        plan = None
        try:
            plan = EvolutionPlan(self._parts(e_ref), t, ev["r"], N, B=self.B.op, C=self.C)
            sw = [plan.unitary(j) for j in range(m)]
        except StructureError:
            sw = None
        truth = _sector_ground(self.H, N)
        out = {"t": t, "e_ref": e_ref, "m": m, "r": ev["r"], "sectors": {}}
        for i, ne in enumerate(self._sectors()):
            psi = sector_prepare(ne, N, energies=self.epsilon)
            seed = self.config["seed"] + i
            h_exact = qpe_run(powers, psi, m, ev["shots"], seed, t, e_ref)
            entry = {"exact": h_exact.to_records(), "peaks_exact": h_exact.peaks(),
                     "ground_energy": truth[ne]}
            if sw is not None:
                h_sw = qpe_run(sw, psi, m, ev["shots"], seed, t, e_ref)
                entry.update({"swrrst": h_sw.to_records(), "peaks_swrrst": h_sw.peaks(),
                              "max_prob_diff": float(np.max(np.abs(h_exact.probabilities - h_sw.probabilities)))})
            out["sectors"][str(ne)] = entry
        self.bundle.histograms = out

    def _stage_verify(self):
        if self.H is None:
            self._stage_load()
            self._stage_auxiliary()
        opts = self._options()
        B = FermionOperator.from_text((self.out / "B.txt").read_text())
        G = FermionOperator.from_text((self.out / "G.txt").read_text())
        solve = self.bundle.solve
        if solve is None:
                solve = json.loads((self.out / "solve.json").read_text())["solve"]
        gen = GeneratorB.from_operator(B, opts.domain, opts.body_rank) if B else GeneratorB({}, opts.domain, opts.body_rank)
        R = residual(self.H_solve, gen, opts.l, self.part, opts.domain, opts.body_rank, opts.bch_rank_cap)
        res = R.norm()
        wanted = "od" if opts.domain == "od" else Sector.DISTINCT
        result = {
            "residual": res,
            "residual_solve": solve["final_residual"],
            "residual_match": abs(res - solve["final_residual"]) <= 1e-12,
            "G_domain_norm": project(G, wanted, self.part).norm(),
        }
        N = self.part.n_modes
        if N <= settings.dense_cap:
            diff = float(np.max(np.abs(_sorted_eigs(self.H, N) - _sorted_eigs(G, N))))
            result["spectrum_max_abs_diff"] = diff
        self.bundle.verify = result


def run_pipeline(config: RunConfig, out_dir: str | Path | None = None, until: str = "verify",
                 stage_cache: bool = False) -> ResultBundle:
    """Run all stages (or up to ``until``) and return the bundle."""
    return Pipeline(config, out_dir, stage_cache).run(until)


_TABLES = {
    "census.tsv": ("sector", "terms", "norm"),
    "residual.tsv": ("iteration", "residual_norm"),
    "spectra.tsv": ("index", "eig_H", "eig_G", "abs_diff"),
    "trotter.tsv": ("r", "error", "error_plain"),
    "histogram.tsv": ("n_e", "pipeline", "outcome", "phase", "probability"),
}


def _cell(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def emit_report(bundle: ResultBundle, out_dir: str | Path, fmt: str = "structured") -> list[Path]:
    """Write ``bundle.json`` (structured) or plot-ready TSV tables (tabular)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "structured":
        path = out / "bundle.json"
        path.write_text(bundle.to_json())
        return [path]
    if fmt != "tabular":
        raise ValueError(f"unknown report format {fmt!r}")
    rows: dict[str, list] = {name: [] for name in _TABLES}
    for sector, info in (bundle.census or {}).items():
        rows["census.tsv"].append((sector, info["terms"], info["norm"]))
    if bundle.solve and "residual_norm_history" in bundle.solve:
        rows["residual.tsv"] = list(enumerate(bundle.solve["residual_norm_history"]))
    for r in (bundle.spectra or {}).get("rows", []):
        rows["spectra.tsv"].append((r["index"], r["eig_H"], r["eig_G"], r["abs_diff"]))
    for r in (bundle.trotter or {}).get("rows", []):
        rows["trotter.tsv"].append((r["r"], r["error"], r["error_plain"]))
    for ne, entry in (bundle.histograms or {}).get("sectors", {}).items():
        for pipe in ("exact", "swrrst"):
            for rec in entry.get(pipe, []):
                rows["histogram.tsv"].append((ne, pipe, rec["outcome"], rec["phase"], rec["probability"]))
    paths = []
    for name, header in _TABLES.items():
        lines = ["\t".join(header)] + ["\t".join(_cell(c) for c in row) for row in rows[name]]
        path = out / name
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths
