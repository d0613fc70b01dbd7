"""Parameterization cases, the identifiability table, the gain-only check,
the N_U sweep and derivative verification, all driven by a :class:`RunConfig`.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .derivs import (
    GAIN_BLOCKS,
    ParamBlock,
    block_slices,
    finite_difference_jacobian,
    jacobian_stack,
    pair_jacobian,
)
from .fisher import Efim, Fim, IdentReport, assemble_fim, efim, identifiability, oeb, peb
from .geometry import EulerAngles, Pose, direction_info, fraunhofer_distance, uniform_planar_array
from .signal import (
    ChannelParams,
    Node,
    Regime,
    Scenario,
    dft_plan,
    identity_plan,
    received_mean,
)

P = ParamBlock
APPENDIX_TOLERANCE = 1e-8
DERIVATIVE_TOLERANCE = 1e-6
CSV_HEADER = ("n_u", "regime", "case", "peb_m", "oeb_rad", "efim_rank", "pd", "config_hash")
LOCATION_BLOCKS = (P.POS_U, P.ORI_U, P.POS_B, P.ORI_B)


class CaseId(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"

    @property
    def location_blocks(self) -> tuple[ParamBlock, ParamBlock]:
        return {
            CaseId.I: (P.POS_U, P.ORI_U),
            CaseId.II: (P.POS_U, P.ORI_B),
            CaseId.III: (P.POS_B, P.ORI_U),
            CaseId.IV: (P.POS_B, P.ORI_B),
        }[self]

    @property
    def unknown_blocks(self) -> tuple[ParamBlock, ...]:
        return self.location_blocks + GAIN_BLOCKS


# ---------------------------------------------------------------------------
# scenario construction


def build_scenario(config: RunConfig, *, n_u: int | None = None, regime: Regime | None = None,
                   plan: str | None = None) -> Scenario:
    """Scenario described by ``config``; keyword overrides win over the config."""
    lam = config.wavelength
    spacing = config.spacing_wavelengths * lam
    n_u = config.n_u if n_u is None else n_u
    plan = config.plan if plan is None else plan
    regime = config.regime_enum if regime is None else regime
    source = Node(Pose(np.array(config.p_b), EulerAngles(*config.phi_b)),
                  uniform_planar_array(config.n_b, spacing))
    destination = Node(Pose(np.array(config.p_u), EulerAngles(*config.phi_u)),
                       uniform_planar_array(n_u, spacing))
    if plan == "identity":
        tx = identity_plan(config.n_b, config.num_transmissions)
    else:
        tx = dft_plan(config.n_b, config.n_d, config.num_transmissions)
    channel = ChannelParams(
        gain_real=config.gain_real,
        gain_imag=config.gain_imag,
        carrier_hz=config.carrier_hz,
        snr_linear=config.snr_linear,
    )
    return Scenario(source, destination, channel, tx, regime)


def scenario_fim(scenario: Scenario, blocks) -> Fim:
    blocks = tuple(blocks)
    return assemble_fim(jacobian_stack(scenario, blocks), scenario.channel.snr_linear, blocks)


# ---------------------------------------------------------------------------
# single case


@dataclass(frozen=True)
class FisherReport:
    case: CaseId
    regime: Regime
    fim: Fim
    efim: Efim
    ident: IdentReport
    peb: float
    oeb: float


def run_case(config: RunConfig, *, case: CaseId | str | None = None, **overrides) -> FisherReport:
    """FIM over the case's unknowns, EFIM of its location blocks, rank and bounds."""
    case = CaseId(config.case if case is None else getattr(case, "value", case))
    scenario = build_scenario(config, **overrides)
    fim = scenario_fim(scenario, case.unknown_blocks)
    pos_blk, ori_blk = case.location_blocks
    eq = efim(fim, case.location_blocks)
    return FisherReport(
        case=case,
        regime=scenario.regime,
        fim=fim,
        efim=eq,
        ident=identifiability(eq),
        peb=peb(eq, pos_blk),
        oeb=oeb(eq, ori_blk),
    )


# ---------------------------------------------------------------------------
# identifiability table

TABLE_ROWS = (
    ("Source position and source orientation", (P.POS_B, P.ORI_B)),
    ("Source position and destination orientation", (P.POS_B, P.ORI_U)),
    ("Destination position and source orientation", (P.POS_U, P.ORI_B)),
    ("Source position", (P.POS_B,)),
    ("Source orientation", (P.ORI_B,)),
    ("Destination position", (P.POS_U,)),
    ("Destination orientation", (P.ORI_U,)),
)

_VERDICTS = {3: "3D", 2: "2D", 1: "1D", 0: "none"}


@dataclass(frozen=True)
class TableRow:
    index: int
    label: str
    regime: str
    plan: str
    verdicts: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    joint_rank: int = 0

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "label": self.label,
            "regime": self.regime,
            "plan": self.plan,
            "verdicts": dict(self.verdicts),
            "ranks": dict(self.ranks),
            "joint_rank": self.joint_rank,
        }


def table_row(config: RunConfig, index: int, regime: Regime, plan: str | None = None) -> TableRow:
    """One row of the table: the listed blocks unknown, everything else known.

    A cell's verdict is the rank of that block's EFIM once the gain and the
    row's other unknown block are both treated as nuisance.
    """
    label, unknown = TABLE_ROWS[index]
    plan = config.plan if plan is None else plan
    scenario = build_scenario(config, regime=regime, plan=plan)
    blocks = tuple(unknown) + GAIN_BLOCKS
    fim = scenario_fim(scenario, blocks)
    verdicts, ranks = {}, {}
    for blk in LOCATION_BLOCKS:
        if blk in unknown:
            r = identifiability(efim(fim, [blk])).rank
            ranks[blk.value] = r
            verdicts[blk.value] = _VERDICTS[r]
        else:
            verdicts[blk.value] = "NA"
    joint = identifiability(efim(fim, unknown)).rank
    return TableRow(index + 1, label, regime.value, plan, verdicts, ranks, joint)


def build_table(config: RunConfig, *, compare_identity: bool = True) -> list[TableRow]:
    """All table rows under both regimes for the configured beamforming plan.

    With ``compare_identity`` and a beamformed plan, rows recomputed with the
    identity plan are appended wherever their verdicts differ.
    """
    rows = [
        table_row(config, i, regime)
        for i in range(len(TABLE_ROWS))
        for regime in (Regime.NEAR, Regime.FAR)
    ]
    if compare_identity and config.plan != "identity":
        for row in list(rows):
            alt = table_row(config, row.index - 1, Regime(row.regime), plan="identity")
            if alt.verdicts != row.verdicts:
                rows.append(alt)
    return rows


def table_json(config: RunConfig, rows: list[TableRow]) -> str:
    doc = {"config_hash": config.config_hash(), "rows": [r.as_dict() for r in rows]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# source orientation without beamforming


@dataclass(frozen=True)
class AppendixResult:
    efim_frobenius: float
    reference_frobenius: float
    ratio: float
    rank: int
    passed: bool
    applicable: bool

    def as_dict(self) -> dict:
        return {
            "efim_frobenius": self.efim_frobenius,
            "reference_frobenius": self.reference_frobenius,
            "ratio": self.ratio,
            "rank": self.rank,
            "passed": self.passed,
            "applicable": self.applicable,
        }


def appendix_check(config: RunConfig) -> AppendixResult:
    """EFIM of the source orientation with only the gain as nuisance.

    ``passed`` means the EFIM vanishes: its Frobenius norm is at most 1e-8
    of the orientation block's own information. The check is meant for the
    far-field model without beamforming (``applicable``); other settings are
    evaluated the same way for comparison.
    """
    scenario = build_scenario(config)
    blocks = (P.ORI_B,) + GAIN_BLOCKS
    fim = scenario_fim(scenario, blocks)
    eq = efim(fim, [P.ORI_B])
    e_norm = float(np.linalg.norm(eq.matrix))
    ref = float(np.linalg.norm(fim.sub([P.ORI_B])))
    ratio = e_norm / ref if ref > 0 else 0.0
    return AppendixResult(
        efim_frobenius=e_norm,
        reference_frobenius=ref,
        ratio=ratio,
        rank=identifiability(eq).rank,
        passed=ratio <= APPENDIX_TOLERANCE,
        applicable=scenario.regime is Regime.FAR and config.plan == "identity",
    )


# ---------------------------------------------------------------------------
# N_U sweep


@dataclass(frozen=True)
class SweepRecord:
    n_u: int
    regime: str
    case: str
    peb_m: float
    oeb_rad: float
    efim_rank: int
    pd: bool
    config_hash: str


def sweep_nu(config: RunConfig) -> list[SweepRecord]:
    """PEB/OEB of destination position and source orientation against N_U."""
    records = []
    for n_u in config.nu_sweep:
        for regime in (Regime.NEAR, Regime.FAR):
            rep = run_case(config, case=CaseId.II, n_u=n_u, regime=regime)
            records.append(SweepRecord(
                n_u=n_u,
                regime=regime.value,
                case=CaseId.II.value,
                peb_m=rep.peb,
                oeb_rad=rep.oeb,
                efim_rank=rep.ident.rank,
                pd=rep.ident.positive_definite,
                config_hash=config.config_hash(),
            ))
    order = {"near": 0, "far": 1}
    records.sort(key=lambda r: (r.n_u, order[r.regime]))
    return records


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.12e}"


def sweep_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.n_u, r.regime, r.case, _fmt(r.peb_m), _fmt(r.oeb_rad), r.efim_rank,
                         "true" if r.pd else "false", r.config_hash])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# derivative verification


def block_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Relative Frobenius error; two all-zero blocks count as agreement."""
    ref = float(np.linalg.norm(analytic))
    diff = float(np.linalg.norm(analytic - numeric))
    if ref == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / ref


def derivative_errors(scenario: Scenario, blocks=tuple(ParamBlock), steps=None) -> dict[ParamBlock, float]:
    """Worst relative error per block over all transmissions."""
    blocks = tuple(blocks)
    pj = pair_jacobian(scenario, blocks)
    slices = block_slices(blocks)
    worst = dict.fromkeys(blocks, 0.0)
    for t in range(scenario.plan.num_transmissions):
        analytic = (pj @ scenario.plan.precoded(t)).T
        numeric = finite_difference_jacobian(received_mean, scenario, blocks, t, steps)
        for blk, sl in slices.items():
            worst[blk] = max(worst[blk], block_relative_error(analytic[:, sl], numeric[:, sl]))
    return worst


@dataclass(frozen=True)
class VerifyReport:
    errors: dict
    tolerance: float = DERIVATIVE_TOLERANCE

    @property
    def worst(self) -> float:
        return max(self.errors.values())

    @property
    def passed(self) -> bool:
        return self.worst < self.tolerance

    def as_dict(self) -> dict:
        return {
            "errors": {f"{reg}/{blk}": err for (reg, blk), err in sorted(self.errors.items())},
            "worst": self.worst,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def verify_derivatives(config: RunConfig) -> VerifyReport:
    """Analytic vs central-difference Jacobians, every block, both regimes."""
    errors = {}
    for regime in (Regime.NEAR, Regime.FAR):
        scenario = build_scenario(config, regime=regime)
        for blk, err in derivative_errors(scenario).items():
            errors[(regime.value, blk.value)] = err
    return VerifyReport(errors)


# ---------------------------------------------------------------------------
# link summary


def link_info(config: RunConfig) -> dict:
    scenario = build_scenario(config)
    lam = config.wavelength
    diameter = max(scenario.source.array.diameter, scenario.destination.array.diameter)
    d_bu = direction_info(config.p_b, config.p_u).distance
    d_f = fraunhofer_distance(diameter, lam) if diameter > 0 else 0.0
    return {
        "wavelength_m": lam,
        "max_diameter_m": diameter,
        "fraunhofer_distance_m": d_f,
        "d_bu_m": d_bu,
        "propagation": "near-field" if d_bu < d_f else "far-field",
        "model_regime": config.regime,
        "config_hash": config.config_hash(),
    }
