"""End-to-end pipeline driver: generate, train, eval, rate.

Datasets are JSON-lines (header object first, then one record per line) with
complex numbers stored as [re, im] pairs; network parameters are single JSON
documents; reports are CSV. Every command is deterministic given its seed and
inputs, so re-runs produce byte-identical files.
"""

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .beamtraining import (
    DEFAULT_WINDOWS,
    STRATEGIES,
    MissingModelError,
    RateConfig,
    StrategyInputs,
    build_codebook,
    effective_rate,
    predicted_comm_aps,
    run_strategy,
)
from .covariance import ToeplitzColumn, first_column, project_toeplitz_psd
from .neuralnet import (
    DivergedLossError,
    LayerSpec,
    NetworkParams,
    TrainConfig,
    train,
    two_channel,
)
from .scenario import (
    GeneratorConfig,
    MismatchConfig,
    PulseConfig,
    RadarSimConfig,
    UlaConfig,
    channel_freq_response,
    ChannelTaps,
    generate_paired_scenario,
)
from .spectrum import Aps, aps, aps_linear_map, dft_grid, from_log_scale, similarity, to_log_scale

FORMAT_VERSION = 1
THREADS_ENV = "R2CBEAM_THREADS"
BOLTZMANN = 1.380649e-23

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """Bad or inconsistent configuration / input files."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ProjectionConfig:
    """Whether and how covariances are projected to the Toeplitz-PSD cone before
    the spectra are extracted (columns always come from the projected matrix).

    The pipeline defaults are looser than the projection operation's own: the
    columns and spectra only feed the networks, the projection output is exactly
    feasible at any stopping point, and the loose setting keeps dataset
    generation fast.
    """

    enabled: bool = True
    tol: float = 1e-5
    max_iter: int = 100


@dataclass
class SplitConfig:
    train: int = 1200
    val: int = 300
    test: int = 500

    def __post_init__(self):
        if min(self.train, self.val, self.test) < 1:
            raise ValueError("split sizes must be at least 1")


@dataclass
class ExperimentConfig:
    scenario: GeneratorConfig = field(default_factory=GeneratorConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    train_aps: TrainConfig = field(default_factory=TrainConfig)
    train_col: TrainConfig = field(default_factory=TrainConfig)
    rate: RateConfig = None
    split: SplitConfig = field(default_factory=SplitConfig)
    master_seed: int = 0
    aps_floor_db: float = -80.0
    similarity_window: int = 5
    phase_bits: int = 2
    windows: dict = field(default_factory=lambda: dict(radar_only=12, aps_pred=12, cov_pred=2))

    def __post_init__(self):
        if self.rate is None:
            self.rate = default_rate_config(self.scenario.rsu.num_antennas,
                                            self.scenario.vehicle.num_antennas)


def default_rate_config(n_rsu: int, n_vehicle: int, bandwidth: float = 491.52e6,
                        tx_power_dbm: float = 24.0, noise_figure_db: float = 7.0,
                        num_subcarriers: int = 64) -> RateConfig:
    """Rate experiment defaults: 24 dBm over 491.52 MHz, symbol period 4.7667 us,
    coherence time 4 N_rsu T_sym N_v, thermal noise floor with a 7 dB noise figure."""
    t_sym = 4.7667e-6
    noise = BOLTZMANN * 290.0 * bandwidth * 10.0 ** (noise_figure_db / 10.0)
    return RateConfig(
        bandwidth=bandwidth,
        tx_power=10.0 ** ((tx_power_dbm - 30.0) / 10.0),
        noise_power=noise,
        symbol_period=t_sym,
        coherence_time=4.0 * n_rsu * t_sym * n_vehicle,
        num_subcarriers=num_subcarriers,
    )


def _build(cls, data, path, defaults=None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    merged = dict(defaults or {})
    merged.update(data)
    try:
        return cls(**merged)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None


def generator_config_from_dict(doc: dict, path: str = "scenario") -> GeneratorConfig:
    doc = dict(doc or {})
    parts = {
        "rsu": _build(UlaConfig, doc.pop("rsu", None), f"{path}.rsu", {"num_antennas": 64}),
        "vehicle": _build(UlaConfig, doc.pop("vehicle", None), f"{path}.vehicle", {"num_antennas": 16}),
        "pulse": _build(PulseConfig, doc.pop("pulse", None), f"{path}.pulse"),
        "radar": _build(RadarSimConfig, doc.pop("radar", None), f"{path}.radar"),
        "mismatch": _build(MismatchConfig, doc.pop("mismatch", None), f"{path}.mismatch"),
    }
    cfg = _build(GeneratorConfig, doc, path)
    for key, value in parts.items():
        setattr(cfg, key, value)
    return cfg


def experiment_config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc or {})
    scenario_cfg = generator_config_from_dict(doc.pop("scenario", None))
    projection = _build(ProjectionConfig, doc.pop("projection", None), "projection")
    train_aps = _build(TrainConfig, doc.pop("train_aps", None), "train_aps")
    train_col = _build(TrainConfig, doc.pop("train_col", None), "train_col")
    split = _build(SplitConfig, doc.pop("split", None), "split")
    rate_doc = doc.pop("rate", None)
    cfg = _build(ExperimentConfig, doc, "config")
    cfg.scenario = scenario_cfg
    cfg.projection = projection
    cfg.train_aps = train_aps
    cfg.train_col = train_col
    cfg.split = split
    cfg.rate = _build(RateConfig, rate_doc, "rate",
                      asdict(default_rate_config(scenario_cfg.rsu.num_antennas,
                                                 scenario_cfg.vehicle.num_antennas)))
    return cfg


def experiment_config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def load_experiment_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from None
    return experiment_config_from_dict(doc)


# ---------------------------------------------------------------------------
# dataset records and file format


def complex_to_pairs(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def pairs_to_complex(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    return a[..., 0] + 1j * a[..., 1]


@dataclass
class DatasetRecord:
    id: int
    radar_cov_column: ToeplitzColumn
    comm_cov_column: ToeplitzColumn
    radar_aps_log: Aps
    comm_aps_log: Aps
    comm_taps: ChannelTaps = None  # omitted from training-only datasets

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "radar_cov_column": complex_to_pairs(self.radar_cov_column.col),
            "comm_cov_column": complex_to_pairs(self.comm_cov_column.col),
            "radar_aps_log": self.radar_aps_log.values.tolist(),
            "comm_aps_log": self.comm_aps_log.values.tolist(),
            "comm_taps": None if self.comm_taps is None
            else complex_to_pairs(self.comm_taps.taps),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DatasetRecord":
        taps = obj.get("comm_taps")
        return cls(
            id=int(obj["id"]),
            radar_cov_column=ToeplitzColumn(pairs_to_complex(obj["radar_cov_column"])),
            comm_cov_column=ToeplitzColumn(pairs_to_complex(obj["comm_cov_column"])),
            radar_aps_log=Aps(np.asarray(obj["radar_aps_log"]), "log_db"),
            comm_aps_log=Aps(np.asarray(obj["comm_aps_log"]), "log_db"),
            comm_taps=None if taps is None else ChannelTaps(pairs_to_complex(taps)),
        )


def make_record(cfg: ExperimentConfig, sample, grid, include_taps: bool) -> DatasetRecord:
    proj = cfg.projection
    radar_proj = project_toeplitz_psd(sample.radar_cov, proj.tol, proj.max_iter)
    comm_proj = project_toeplitz_psd(sample.comm_cov, proj.tol, proj.max_iter)
    radar_src = radar_proj if proj.enabled else sample.radar_cov
    comm_src = comm_proj if proj.enabled else sample.comm_cov
    return DatasetRecord(
        id=sample.id,
        radar_cov_column=first_column(radar_proj),
        comm_cov_column=first_column(comm_proj),
        radar_aps_log=to_log_scale(aps(radar_src, grid), cfg.aps_floor_db),
        comm_aps_log=to_log_scale(aps(comm_src, grid), cfg.aps_floor_db),
        comm_taps=sample.comm_taps if include_taps else None,
    )


def record_seed(master_seed: int, sample_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, sample_id])


def generate_records(cfg: ExperimentConfig, count: int, seed: int,
                     include_taps: bool, threads: int = 1):
    """Records 0..count-1, each drawn from an independent stream seeded by
    (seed, id); order-independent, so threading cannot change the output."""
    grid = dft_grid(cfg.scenario.rsu.num_antennas, cfg.scenario.rsu.spacing)

    def one(sample_id: int) -> DatasetRecord:
        rng = np.random.default_rng(record_seed(seed, sample_id))
        sample = generate_paired_scenario(cfg.scenario, rng, sample_id=sample_id)
        return make_record(cfg, sample, grid, include_taps)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(one, range(count))
    else:
        yield from (one(i) for i in range(count))


def write_dataset(path, cfg: ExperimentConfig, count: int, seed: int,
                  include_taps: bool = True, threads: int = 1) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "r2cbeam-dataset",
        "count": count,
        "seed": seed,
        "include_taps": include_taps,
        "config": experiment_config_to_dict(cfg),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for record in generate_records(cfg, count, seed, include_taps, threads):
            fh.write(json.dumps(record.to_json_obj(), separators=(",", ":")) + "\n")


def read_dataset(path):
    """Returns (config, header, list of DatasetRecords)."""
    with open(path) as fh:
        head_line = fh.readline()
        if not head_line:
            raise ConfigError(f"{path}: empty dataset file")
        try:
            header = json.loads(head_line)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:1: bad header ({e})") from None
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise ConfigError(f"{path}: format version {version} not supported "
                              f"(expected {FORMAT_VERSION})")
        cfg = experiment_config_from_dict(header.get("config", {}))
        records = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                records.append(DatasetRecord.from_json_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as e:
                raise ConfigError(f"{path}:{lineno}: bad record ({e})") from None
    return cfg, header, records


# ---------------------------------------------------------------------------
# network parameter files


def params_to_json_obj(net: NetworkParams) -> dict:
    return {
        "model": net.model,
        "layers": [spec.to_dict() for spec in net.layers],
        "tensors": {name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
                    for name, t in net.tensors.items()},
        "normalizer": net.normalizer,
    }


def params_from_json_obj(obj: dict) -> NetworkParams:
    tensors = {name: np.asarray(t["data"], dtype=np.float64).reshape(t["shape"])
               for name, t in obj["tensors"].items()}
    return NetworkParams(
        model=obj["model"],
        layers=[LayerSpec.from_dict(d) for d in obj["layers"]],
        tensors=tensors,
        normalizer=float(obj["normalizer"]),
    )


def save_params(path, net: NetworkParams) -> None:
    with open(path, "w") as fh:
        json.dump(params_to_json_obj(net), fh, separators=(",", ":"))
        fh.write("\n")


def load_params(path) -> NetworkParams:
    with open(path) as fh:
        return params_from_json_obj(json.load(fh))


# ---------------------------------------------------------------------------
# shared evaluation helpers


def training_arrays(model: str, records: list, cfg: ExperimentConfig):
    """(inputs, targets) arrays for one model; see neuralnet.train for shapes."""
    if model == "aps":
        x = np.stack([r.radar_aps_log.values for r in records])
        y = np.stack([r.comm_aps_log.values for r in records])
    else:
        grid = dft_grid(cfg.scenario.rsu.num_antennas, cfg.scenario.rsu.spacing)
        m = aps_linear_map(grid)
        x = np.stack([two_channel(r.radar_cov_column.col) for r in records])
        y = np.stack([two_channel(r.comm_cov_column.col) for r in records]) @ m.T
    return x, y


def nearest_rank_percentile(values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value."""
    data = np.sort(np.asarray(values, dtype=np.float64))
    rank = max(1, math.ceil(pct / 100.0 * data.size))
    return float(data[rank - 1])


def strategy_inputs(record: DatasetRecord, rate_cfg: RateConfig) -> StrategyInputs:
    if record.comm_taps is None:
        raise ConfigError(f"record {record.id} has no channel taps; regenerate the "
                          "dataset without --no-taps to run the rate experiment")
    ch = channel_freq_response(record.comm_taps, rate_cfg.num_subcarriers)
    return StrategyInputs(
        ch=ch,
        radar_aps=from_log_scale(record.radar_aps_log),
        comm_aps=from_log_scale(record.comm_aps_log),
        radar_col=record.radar_cov_column,
    )


# ---------------------------------------------------------------------------
# commands


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def cmd_generate(args) -> int:
    cfg = load_experiment_config(args.config)
    count = args.count if args.count is not None else \
        cfg.split.train + cfg.split.val + cfg.split.test
    seed = args.seed if args.seed is not None else cfg.master_seed
    if count < 1:
        raise ConfigError("count must be at least 1")
    write_dataset(args.out, cfg, count, seed, include_taps=not args.no_taps,
                  threads=_threads())
    print(f"wrote {count} records to {args.out} (seed {seed})")
    return EXIT_OK


def _train_split(records, args):
    if args.val:
        _, _, val_records = read_dataset(args.val)
        return records, val_records
    frac = args.val_fraction
    if not 0.0 < frac < 1.0:
        raise ConfigError("val fraction must be in (0, 1)")
    cut = len(records) - max(1, int(round(frac * len(records))))
    if cut < 1:
        raise ConfigError("validation fraction leaves no training records")
    return records[:cut], records[cut:]


def cmd_train(args) -> int:
    cfg, _, records = read_dataset(args.data)
    train_records, val_records = _train_split(records, args)
    tc = cfg.train_aps if args.model == "aps" else cfg.train_col
    if args.seed is not None:
        tc.seed = args.seed
    if args.epochs is not None:
        tc.max_epochs = args.epochs
    if args.batch_size is not None:
        tc.batch_size = args.batch_size
    if args.lr is not None:
        tc.learning_rate = args.lr
    if args.patience is not None:
        tc.patience = args.patience

    x_train, y_train = training_arrays(args.model, train_records, cfg)
    x_val, y_val = training_arrays(args.model, val_records, cfg)
    grid = dft_grid(cfg.scenario.rsu.num_antennas, cfg.scenario.rsu.spacing)
    net, history = train(args.model, (x_train, y_train), (x_val, y_val), tc, grid=grid,
                         aps_floor_db=cfg.aps_floor_db)
    save_params(args.out, net)

    history_path = args.out + ".history.csv"
    with open(history_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for row in history:
            writer.writerow([row["epoch"], repr(row["train_loss"]), repr(row["val_loss"])])
    best = min(h["val_loss"] for h in history)
    print(f"trained {args.model} for {len(history)} epochs; best val loss {best:.6g}; "
          f"params -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg, _, records = read_dataset(args.data)
    aps_net = load_params(args.aps_params) if args.aps_params else None
    col_net = load_params(args.col_params) if args.col_params else None
    grid = dft_grid(cfg.scenario.rsu.num_antennas, cfg.scenario.rsu.spacing)
    window = cfg.similarity_window

    columns = {"radar_baseline": [], "aps_pred": [], "cov_pred": []}
    for rec in records:
        inputs = StrategyInputs(ch=None, radar_aps=from_log_scale(rec.radar_aps_log),
                                comm_aps=from_log_scale(rec.comm_aps_log),
                                radar_col=rec.radar_cov_column)
        columns["radar_baseline"].append(similarity(inputs.radar_aps, inputs.comm_aps, window))
        for name, net in (("aps_pred", aps_net), ("cov_pred", col_net)):
            if net is None:
                columns[name].append(None)
                continue
            guide = predicted_comm_aps(name, inputs, grid, aps_net, col_net, cfg.aps_floor_db)
            columns[name].append(similarity(guide, inputs.comm_aps, window))

    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "sim_radar_baseline", "sim_aps_pred", "sim_cov_pred"])
        for i, rec in enumerate(records):
            writer.writerow([rec.id] + [fmt(columns[c][i]) for c in
                                        ("radar_baseline", "aps_pred", "cov_pred")])
        for label, stat in (("mean", np.mean), ("p10", lambda v: nearest_rank_percentile(v, 10)),
                            ("p50", lambda v: nearest_rank_percentile(v, 50)),
                            ("p90", lambda v: nearest_rank_percentile(v, 90))):
            row = [label]
            for c in ("radar_baseline", "aps_pred", "cov_pred"):
                vals = [v for v in columns[c] if v is not None]
                row.append(repr(float(stat(np.asarray(vals)))) if vals else "")
            writer.writerow(row)
    print(f"similarity report for {len(records)} records -> {args.out}")
    return EXIT_OK


TCOH_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)


def cmd_rate(args) -> int:
    cfg, _, records = read_dataset(args.data)
    strategies = [s.strip() for s in args.strategies.split(",")] if args.strategies else list(STRATEGIES)
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r} (choose from {', '.join(STRATEGIES)})")
    aps_net = load_params(args.aps_params) if args.aps_params else None
    col_net = load_params(args.col_params) if args.col_params else None
    for s in strategies:
        if s == "aps_pred" and aps_net is None:
            raise MissingModelError("strategy aps_pred requires --aps-params")
        if s == "cov_pred" and col_net is None:
            raise MissingModelError("strategy cov_pred requires --col-params")

    n_rsu = cfg.scenario.rsu.num_antennas
    n_vehicle = cfg.scenario.vehicle.num_antennas
    grid = dft_grid(n_rsu, cfg.scenario.rsu.spacing)
    tx_cb = build_codebook(n_rsu, cfg.phase_bits, cfg.scenario.rsu.spacing)
    rx_cb = build_codebook(n_vehicle, cfg.phase_bits, cfg.scenario.vehicle.spacing)

    def window_for(strategy):
        if strategy == "exhaustive":
            return None
        if args.window is not None:
            return args.window
        return cfg.windows.get(strategy, DEFAULT_WINDOWS[strategy])

    rows = []
    for rec in records:
        inputs = strategy_inputs(rec, cfg.rate)
        for s in strategies:
            row = run_strategy(inputs, s, tx_cb, rx_cb, grid, cfg.rate,
                               aps_net=aps_net, col_net=col_net, window=window_for(s),
                               similarity_window=cfg.similarity_window,
                               floor_db=cfg.aps_floor_db)
            rows.append((rec.id, row))

    def fmt_sim(v):
        return "" if math.isnan(v) else repr(float(v))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "strategy", "tx_index", "rx_index", "overhead_blocks",
                         "se_bpshz", "rate_bps", "similarity_L5"])
        for rec_id, row in rows:
            writer.writerow([rec_id, row.strategy, row.tx_index, row.rx_index,
                             row.overhead_blocks, repr(row.spectral_efficiency),
                             repr(row.rate), fmt_sim(row.similarity)])
        for s in strategies:
            srows = [row for _, row in rows if row.strategy == s]
            mean_rate = float(np.mean([r.rate for r in srows]))
            sims = [r.similarity for r in srows if not math.isnan(r.similarity)]
            writer.writerow(["mean", s, "", "", "", "", repr(mean_rate),
                             repr(float(np.mean(sims))) if sims else ""])

    sweep_path = args.out + ".tcoh_sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "tcoh_multiplier", "coherence_time_s", "mean_rate_bps"])
        for mult in TCOH_MULTIPLIERS:
            scaled = RateConfig(**{**asdict(cfg.rate),
                                   "coherence_time": cfg.rate.coherence_time * mult})
            for s in strategies:
                srows = [row for _, row in rows if row.strategy == s]
                rates = [effective_rate(r.spectral_efficiency, r.overhead_blocks, scaled)
                         for r in srows]
                writer.writerow([s, repr(mult), repr(scaled.coherence_time),
                                 repr(float(np.mean(rates)))])
    print(f"rate report for {len(records)} records -> {args.out} (sweep -> {sweep_path})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="r2cbeam",
        description="Radar-aided mmWave beam training: dataset generation, "
                    "radar-to-comm model training, similarity and rate reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a paired radar/comm dataset")
    g.add_argument("--config", help="experiment config JSON (defaults if omitted)")
    g.add_argument("--out", required=True, help="output dataset (JSON lines)")
    g.add_argument("--count", type=int, help="number of records (default: sum of split sizes)")
    g.add_argument("--seed", type=int, help="master seed (default: config master_seed)")
    g.add_argument("--no-taps", action="store_true",
                   help="omit channel taps (smaller files; rate experiment unavailable)")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train one of the two prediction networks")
    t.add_argument("--model", required=True, choices=["aps", "col"])
    t.add_argument("--data", required=True, help="training dataset")
    t.add_argument("--val", help="separate validation dataset")
    t.add_argument("--val-fraction", type=float, default=0.2,
                   help="tail fraction of --data used for validation when --val is absent")
    t.add_argument("--out", required=True, help="output params JSON "
                   "(history goes to <out>.history.csv)")
    t.add_argument("--seed", type=int, help="override training seed")
    t.add_argument("--epochs", type=int, help="override max epochs")
    t.add_argument("--batch-size", type=int, help="override batch size")
    t.add_argument("--lr", type=float, help="override learning rate")
    t.add_argument("--patience", type=int, help="override early-stopping patience")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="similarity report on a dataset")
    e.add_argument("--data", required=True)
    e.add_argument("--aps-params", help="trained spectrum-prediction params")
    e.add_argument("--col-params", help="trained column-prediction params")
    e.add_argument("--out", required=True, help="output CSV")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("rate", help="effective-rate report on a dataset with taps")
    r.add_argument("--data", required=True)
    r.add_argument("--aps-params")
    r.add_argument("--col-params")
    r.add_argument("--strategies", help="comma list (default: all four)")
    r.add_argument("--window", type=int, help="override the beam window of every "
                   "non-exhaustive strategy")
    r.add_argument("--out", required=True, help="output CSV (coherence-time sweep "
                   "goes to <out>.tcoh_sweep.csv)")
    r.set_defaults(func=cmd_rate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MissingModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergedLossError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
