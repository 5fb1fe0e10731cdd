import dataclasses
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.experiments.ledger import CheckLedger
from src.experiments.verify import nonvanish_chain_checks, run_verify, sweep_checks
from src.fields.grid import Frame, Trajectory
from src.fields.norms import sobolev_cm_norm
from src.fields.snapshot import read_snapshot
from src.kernels.constants import RADIAL_NODES, kernel_constants
from src.limits.blowup import BlowupReport, blowup_fit, center_series_from_w
from src.limits.forcing import synthesize_forcing
from src.limits.sweep import viscosity_sweep
from src.scheme.audit import transform_audit
from src.scheme.config import ConvectionVariant, SchemeConfig, Toggles
from src.scheme.duhamel import free_evolution
from src.scheme.picard import (contraction_constant, increment_tail_report, march,
                               run_whole_interval, scheme_data, trajectory_norm)
from src.scheme.residual import defect_tolerance, residual_check
from src.utils.config import ConfigManager
from src.utils.errors import DomainError
from src.utils.reporting import ReportWriter

TRAJECTORY_DIR = "trajectory"


def _slice_name(index: int) -> str:
    return f"{TRAJECTORY_DIR}/slice_{index:04d}.cw"


class ExperimentRunner:
    """Runs the configured experiment and writes its CSV, JSON and snapshot artifacts."""

    def __init__(self, config_manager: ConfigManager, progress: bool = True):
        """Initialize with a loaded configuration manager."""
        self.config_manager = config_manager
        self.output_dir = config_manager.output_dir
        self.writer = ReportWriter(self.output_dir)
        self.progress = progress
        self.experiment = config_manager.get_experiment_config()
        self.emit_snapshots = bool(self.experiment.get('emit_snapshots', False))
        logging.info(f"ExperimentRunner initialized (output: {self.output_dir})")

    def execute(self, name: Optional[str] = None):
        """Run one experiment by name (default: experiment.name from the config).

        Returns:
            CheckLedger for verify, sweep and diagnose; a summary dictionary otherwise
        """
        name = name or self.experiment.get('name', 'verify')
        actions = {
            'verify': self.verify,
            'run': self.run,
            'sweep': self.sweep,
            'diagnose': self.diagnose,
            'audit': self.audit,
        }
        if name not in actions:
            raise ValueError(f"Unknown experiment: {name}")
        self.config_manager.write_resolved(self.output_dir)
        logging.info(f"Starting experiment '{name}'")
        return actions[name]()

    # -- verify / audit ---------------------------------------------------

    def verify(self) -> CheckLedger:
        kernels = self.config_manager.get_kernels_config()
        ledger = run_verify(
            self.config_manager.get_chart(),
            mu=float(kernels.get('mu', 0.5)),
            sample_count=int(self.experiment.get('audit_samples', 1000)),
            seed=self.config_manager.get_seed(),
            radial_nodes=int(kernels.get('radial_nodes', RADIAL_NODES)),
            progress=self.progress,
        )
        self.writer.write_json("ledger.json", ledger.to_dict())
        return ledger

    def audit(self) -> Dict:
        audit = transform_audit(
            sample_count=int(self.experiment.get('audit_samples', 1000)),
            seed=self.config_manager.get_seed(),
            n=self.config_manager.get_chart().n,
            progress=self.progress,
        )
        self.writer.write_json("audit.json", audit.to_dict())
        rows = [(key, entry.max_rel_error, entry.matches,
                 np.nan if entry.measured_factor is None else entry.measured_factor)
                for key, entry in sorted(audit.entries.items())]
        self.writer.write_csv("audit.csv", [("term", "-"), ("max_rel_error", "1"),
                                            ("matches", "bool"), ("measured_factor", "1")], rows)
        return {"selected_variant": audit.selected_variant,
                "all_implemented_match": audit.all_implemented_match}

    # -- run ----------------------------------------------------------------

    def run(self) -> Dict:
        """March one scheme instance and store its trajectory for diagnose."""
        config = self.config_manager.get_scheme_config()
        data = scheme_data(config)
        trajectory = march(config, data, progress=self.progress)
        residual = residual_check(trajectory, config)
        norm = trajectory_norm(trajectory.samples, config)
        rho = config.chart.rho
        t = config.t_grid
        center = trajectory.center_series(0)
        summary = {
            "rho": rho,
            "nu": config.nu,
            "n": config.chart.n,
            "m": config.m,
            "points_per_axis": config.points_per_axis,
            "slices": config.slices,
            "s_max": float(config.s_grid[-1]),
            "toggles": dataclasses.asdict(config.toggles),
            "convection_variant": config.convection_variant.value,
            "max_fixed_point_sweeps": max(trajectory.meta.get("sweeps", [0]) or [0]),
            "trajectory_norm": norm.combined,
            "residual_max": residual.max_norm,
            "step_defect_max": residual.max_defect,
            "center_final": float(center[-1]),
        }

        if not config.toggles.nonlinear and not config.toggles.damping:
            heat = free_evolution(data, config, damping=False)
            summary["heat_flow_deviation"] = float(np.abs(heat.samples - trajectory.samples).max())
        if config.toggles == Toggles.only('damping'):
            expected = (rho - t) / rho
            summary["damping_oracle_deviation"] = float(np.abs(center - expected).max())

        self.writer.write_csv(
            "run_center.csv",
            [("s", "1"), ("t", "time"), ("w_center", "velocity*length"), ("v_center", "velocity")],
            zip(config.s_grid, t, center, center / (rho - t)),
        )
        self.writer.write_csv("run_residual.csv", [("s", "1"), ("residual_l2", "1")],
                              zip(residual.times, residual.norms))
        self.writer.write_csv("run_defect.csv", [("s_start", "1"), ("s_end", "1"), ("defect_l2", "1")],
                              zip(config.s_grid[:-1], config.s_grid[1:], residual.defects))
        with tqdm(total=len(trajectory), desc="Writing slices", unit="slice",
                  disable=not self.progress) as pbar:
            for index in range(len(trajectory)):
                self.writer.write_snapshot(_slice_name(index), trajectory.slice(index), rho, config.nu)
                pbar.update(1)
        if self.emit_snapshots:
            self.writer.write_snapshot("data.cw", data, rho, config.nu)
        self.writer.write_json("run.json", summary)
        print(f"Run finished: center w(s_max, 0) = {center[-1]:.6g}, residual max = {residual.max_norm:.3e}, "
              f"step defect max = {residual.max_defect:.3e}")
        return summary

    # -- sweep --------------------------------------------------------------

    def sweep(self) -> CheckLedger:
        """Viscosity sweeps over the rho ladder with contraction measurements per (rho, nu).

        Returns:
            CheckLedger holding the contraction and extrapolation thresholds
        """
        limits = self.config_manager.get_limits_config()
        kernels = self.config_manager.get_kernels_config()
        nus = [float(nu) for nu in limits.get('nus', [0.1, 0.01, 0.001])]
        rhos = [float(rho) for rho in limits.get('rhos', [0.05, 0.02])]
        contraction_slices = int(limits.get('contraction_slices', 16))
        contraction_s_max = float(limits.get('contraction_s_max', 1.0))
        n = self.config_manager.get_chart().n
        constants = kernel_constants(n, float(kernels.get('mu', 0.5)),
                                     int(kernels.get('radial_nodes', RADIAL_NODES)))

        summary_rows: List[tuple] = []
        report: Dict = {"nus": nus, "rhos": rhos, "per_rho": {}}
        max_ratios: Dict[float, Dict[float, float]] = {}
        for rho in rhos:
            base = self.config_manager.get_scheme_config(rho=rho)
            data = scheme_data(base)
            result = viscosity_sweep(base, nus, data, progress=self.progress)
            self._write_center_table(rho, base, result)

            data_norm = sobolev_cm_norm(data, base.m, warn=False).combined
            predicted = rho * contraction_constant(data_norm, base.m, constants)
            max_ratios[rho] = {}
            contraction = {}
            for nu in nus:
                short = dataclasses.replace(base, nu=nu, slices=contraction_slices,
                                            s_max=contraction_s_max)
                state = run_whole_interval(short, data, progress=False)
                self._write_increment_table(rho, nu, state)
                ratios = state.ratios
                max_ratio = float(max(ratios)) if ratios else float("nan")
                max_ratios[rho][nu] = max_ratio
                tail = increment_tail_report(state)
                contraction[str(nu)] = {
                    "ratios": ratios,
                    "max_ratio": max_ratio,
                    "predicted_ratio": predicted,
                    "within_prediction": bool(ratios) and max_ratio <= predicted,
                    "increment_sup_sum": tail.increment_sup_sum,
                    "center_deviation": tail.center_deviation,
                    "tail_holds": tail.tail_holds,
                    "converged": state.converged,
                }
                summary_rows.append((rho, nu, max_ratio, predicted, float(result.trajectories[nu][-1]),
                                     result.norms[nu], tail.increment_sup_sum))

            report["per_rho"][str(rho)] = {
                "order": result.order,
                "declined": result.declined,
                "notes": result.notes,
                "extrapolated_final": float(result.extrapolated[-1]),
                "error_final": float(result.error[-1]),
                "data_norm": data_norm,
                "contraction_constant": predicted / rho,
                "contraction": contraction,
            }
            if self.emit_snapshots:
                self.writer.write_snapshot(f"data_rho{rho:g}.cw", data, rho, 0.0)

        report["trends"] = self._contraction_trends(rhos, nus, max_ratios)
        ledger = CheckLedger()
        sweep_checks(ledger, report)
        report["ledger"] = ledger.to_dict()
        self.writer.write_csv(
            "sweep_summary.csv",
            [("rho", "time"), ("nu", "length^2/time"), ("max_ratio", "1"), ("predicted_ratio", "1"),
             ("center_final", "velocity*length"), ("trajectory_norm", "1"), ("increment_sup_sum", "1")],
            summary_rows,
        )
        self.writer.write_json("sweep.json", report)
        print(f"Sweep finished: {len(summary_rows)} (rho, nu) rows, {len(ledger.failures)} failed checks")
        return ledger

    def _write_center_table(self, rho: float, config: SchemeConfig, result) -> None:
        columns = [("s", "1"), ("t", "time")]
        columns += [(f"w_center[nu={nu:g}]", "velocity*length") for nu in result.nus]
        columns += [("extrapolated", "velocity*length"), ("error", "velocity*length")]
        series = [result.trajectories[nu] for nu in result.nus]
        rows = [(s, t, *[col[i] for col in series], result.extrapolated[i], result.error[i])
                for i, (s, t) in enumerate(zip(config.s_grid, config.t_grid))]
        self.writer.write_csv(f"sweep_center_rho{rho:g}.csv", columns, rows)

    def _write_increment_table(self, rho: float, nu: float, state) -> None:
        ratios = [np.nan] + state.ratios
        rows = [(k + 1, report.sobolev, report.sup_cm, ratio)
                for k, (report, ratio) in enumerate(zip(state.increments, ratios))]
        self.writer.write_csv(
            f"sweep_increments_rho{rho:g}_nu{nu:g}.csv",
            [("k", "sweep"), (f"increment_H{state.increments[0].m}", "1"),
             (f"increment_C{state.increments[0].m}", "1"), ("ratio", "1")],
            rows,
        )

    @staticmethod
    def _contraction_trends(rhos: List[float], nus: List[float],
                            max_ratios: Dict[float, Dict[float, float]]) -> Dict:
        """Ratio of ratios between consecutive rhos and the spread of ratios across nus."""
        trends: Dict = {"ratio_of_ratios": {}, "spread_across_nu": {}}
        for rho_a, rho_b in zip(rhos, rhos[1:]):
            key = f"{rho_b:g}/{rho_a:g}"
            trends["ratio_of_ratios"][key] = {str(nu): max_ratios[rho_b][nu] / max_ratios[rho_a][nu]
                                              for nu in nus}
        for rho in rhos:
            values = np.array([max_ratios[rho][nu] for nu in nus])
            trends["spread_across_nu"][str(rho)] = float((values.max() - values.min()) / values.mean())
        return trends

    # -- diagnose -----------------------------------------------------------

    def _load_run(self):
        info = self.writer.read_json("run.json")
        config = self.config_manager.get_scheme_config(
            rho=info["rho"], nu=info["nu"], m=info["m"], points_per_axis=info["points_per_axis"],
            slices=info["slices"], s_max=info["s_max"], toggles=Toggles(**info["toggles"]),
            convection_variant=ConvectionVariant(info["convection_variant"]),
        )
        slices = []
        for index in range(config.slices):
            path = Path(self.output_dir) / _slice_name(index)
            if not path.exists():
                raise FileNotFoundError(f"Required input not found: {path}")
            field, _ = read_snapshot(path)
            slices.append(field.samples)
        trajectory = Trajectory(config.grid, config.s_grid, np.stack(slices), Frame.CONE_Y,
                                {"quantity": "w"})
        return info, config, trajectory

    def _extend_to_ladder(self, config: SchemeConfig, trajectory: Trajectory, data,
                          eps_fractions: List[float]):
        """March the stored run on, with the same s-step, until t reaches rho (1 - min eps)."""
        chart = config.chart
        s_end = float(chart.s_of_t(chart.rho * (1.0 - min(eps_fractions))))
        if config.s_max >= s_end:
            return config, trajectory
        slices = int(np.ceil(s_end / config.ds)) + 1
        if (slices - 1) * config.ds < s_end:
            slices += 1
        extended = dataclasses.replace(config, slices=slices, s_max=(slices - 1) * config.ds)
        logging.info(f"Extending the stored run from s={config.s_max:.4g} to s={extended.s_max:.4g} "
                     f"({slices} slices) so every forcing-ladder rung is reached")
        return extended, march(extended, data, progress=self.progress, prefix=trajectory)

    def diagnose(self) -> CheckLedger:
        """Blow-up fit, forcing synthesis, step defects and the non-vanishing chain of the stored run.

        The stored run is first marched on until the smallest forcing-ladder rung
        is reached; stored sweep tables are fitted too when present.

        Returns:
            CheckLedger of the forcing, defect and non-vanishing checks
        """
        info, stored_config, stored = self._load_run()
        limits = self.config_manager.get_limits_config()
        kernels = self.config_manager.get_kernels_config()
        eps_fractions = [float(e) for e in limits.get('eps_fractions', [1e-2, 1e-3, 1e-4])]
        data = scheme_data(stored_config)
        config, trajectory = self._extend_to_ladder(stored_config, stored, data, eps_fractions)
        chart = config.chart
        ledger = CheckLedger()
        report: Dict = {"rho": chart.rho, "nu": config.nu, "toggles": info["toggles"],
                        "stored_s_max": float(stored_config.s_max), "s_max": float(config.s_max),
                        "slices": config.slices}

        center = center_series_from_w(trajectory.times, trajectory.center_series(0), chart)
        blowup, report["blowup"] = self._fit_or_note(center.t, center.v, chart)
        self.writer.write_csv("diagnose_center.csv",
                              [("t", "time"), ("v_center", "velocity"), ("w_center", "velocity*length")],
                              zip(center.t, center.v, center.v * (chart.rho - center.t)))

        forcing = synthesize_forcing(trajectory, config.nu, chart, eps_fractions)
        report["forcing"] = {"eps": forcing.eps, "l2_fw": forcing.l2_fw, "l2_fv": forcing.l2_fv,
                             "eps_covered": forcing.eps_covered, "cauchy": forcing.cauchy,
                             "notes": forcing.notes}
        self.writer.write_csv("diagnose_forcing.csv",
                              [("eps", "time"), ("l2_fw", "1"), ("l2_fv", "1"), ("covered", "bool")],
                              zip(forcing.eps, forcing.l2_fw, forcing.l2_fv, forcing.eps_covered))
        ledger.add_check("diagnose.forcing_ladder_covered", all(forcing.eps_covered),
                         forcing.eps_covered, True)
        ledger.add_check("diagnose.forcing_cauchy", forcing.cauchy, forcing.l2_fv,
                         "shrinking successive differences")

        unforced = residual_check(trajectory, config)
        forced = residual_check(trajectory, config, forcing=forcing.f_w)
        tolerance = defect_tolerance(trajectory, config)
        report["residual"] = {"unforced_max": unforced.max_norm, "forced_max": forced.max_norm,
                              "defect_max": unforced.max_defect, "forced_defect_max": forced.max_defect,
                              "defect_tolerance": tolerance}
        ledger.add_check("diagnose.step_defect", unforced.max_defect <= tolerance,
                         unforced.max_defect, tolerance)
        ledger.add_check("diagnose.forced_step_defect", forced.max_defect <= tolerance,
                         forced.max_defect, tolerance)
        ledger.add_measured("diagnose.strong_residual", unforced.max_norm,
                            note="centered s-differences carry an O(ds^2) truncation error")

        if config.toggles == Toggles():
            short = dataclasses.replace(stored_config,
                                        slices=int(limits.get('contraction_slices', 16)),
                                        s_max=float(limits.get('contraction_s_max', 1.0)))
            state = run_whole_interval(short, data, progress=False)
            tail = increment_tail_report(state)
            report["chain"] = {"increment_sup_sum": tail.increment_sup_sum,
                               "center_deviation": tail.center_deviation,
                               "ratios": tail.ratios, "converged": state.converged}
            nonvanish_chain_checks(ledger, chart, float(kernels.get('mu', 0.5)),
                                   float(data.at_origin()[0]), tail, center, blowup,
                                   prefix="diagnose.chain")
        else:
            ledger.add_measured("diagnose.chain", "skipped",
                                note="the non-vanishing chain is defined for the full-term equation")

        sweep_tables = {}
        if (Path(self.output_dir) / "sweep.json").exists():
            sweep = self.writer.read_json("sweep.json")
            for rho in sweep["rhos"]:
                table = self.writer.read_csv(f"sweep_center_rho{rho:g}.csv")
                sweep_chart = self.config_manager.get_chart(rho)
                series = center_series_from_w(table[:, 0], table[:, -2], sweep_chart)
                sweep_tables[str(rho)] = self._fit_or_note(series.t, series.v, sweep_chart)[1]
        report["sweep_blowup"] = sweep_tables

        if self.emit_snapshots:
            last = len(trajectory) - 1
            self.writer.write_snapshot("forcing_fv_final.cw", forcing.f_v.slice(last), chart.rho, config.nu)
        report["ledger"] = ledger.to_dict()
        self.writer.write_json("diagnose.json", report)
        if blowup is not None:
            print(f"Diagnose finished: fitted order {blowup.fitted_order:.4f}, "
                  f"{len(ledger.failures)} failed checks")
        else:
            print(f"Diagnose finished: {len(ledger.failures)} failed checks")
        return ledger

    @staticmethod
    def _fit_or_note(t, v, chart) -> Tuple[Optional[BlowupReport], Dict]:
        try:
            report = blowup_fit(t, v, chart)
        except DomainError as e:
            logging.warning(f"Blow-up fit skipped: {e}")
            return None, {"skipped": str(e)}
        return report, dataclasses.asdict(report)
