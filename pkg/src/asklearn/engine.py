"""Active-learning experiment orchestration.

One round: train a fresh calibrated model on the labeled pool, pseudo-label
the unlabeled pool, embed, select a query batch, have the oracle annotate
it, commit the batch, evaluate on the held-out test split. Rounds repeat
until the labeling budget is exhausted; experiments repeat over trials with
consecutive seeds and aggregate per-round mean and standard deviation.

Reproducibility: every random draw comes from a generator derived from
(trial_seed, round_index, purpose), so two runs that share a seed agree
draw-for-draw regardless of strategy-specific code paths, and a resumed run
continues exactly where the checkpoint left off.

The loop itself never sees pool ground truth. It holds the train images
only; labels enter exclusively through the oracle's annotations.
"""

import csv
import json
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .calibration import CalibSpec
from .data import Dataset, PoolState, commit_query, init_pools, load_idx
from .embedding import grad_embed
from .errors import ConfigInvalid
from .metrics import evaluate
from .model import MlpModel, train
from .oracle import Oracle, OracleSpec
from .pseudolabel import refine_labels
from .sampler import (
    QueryBatch,
    confidence_select,
    entropy_select,
    kmeanspp_select,
    random_select,
)

STRATEGIES = (
    "asklearn_vwcc",
    "asklearn_lwcc",
    "badge",
    "entropy",
    "confidence",
    "random",
)

# Stable stream codes: changing these invalidates recorded runs.
_PURPOSES = {"pool": 0, "model": 1, "augment": 2, "select": 3, "oracle": 4}

CSV_HEADER = ["round", "labeled_count", "accuracy", "ece", "nll", "brier", "wall_ms"]


def derive_rng(trial_seed: int, round_index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (trial, round, purpose) stream."""
    return np.random.default_rng(
        np.random.SeedSequence([trial_seed, round_index, _PURPOSES[purpose]])
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; round-trips through JSON.

    The JSON config file uses exactly these field names as keys. CLI
    overrides (--seed, --strategy, --out) replace seed, strategy, and
    out_dir after loading.
    """

    train_images: str
    train_labels: str
    test_images: str
    test_labels: str
    strategy: str = "asklearn_vwcc"
    seed_size: int = 100
    query_batch: int = 100
    budget: int = 900
    hidden_dims: tuple[int, ...] = (256, 256, 256)
    dropout: float = 0.2
    tau: float = 0.9
    augment_count: int = 5
    calib_weight: float = 1.0
    calib_passes: int = 10
    train_epochs: int = 100
    train_batch: int = 64
    learning_rate: float = 1e-3
    ece_bins: int = 15
    oracle_kind: str = "exact"
    noise_ratio: float = 0.0
    trials: int = 3
    seed: int = 0
    out_dir: str = ""
    class_names: tuple[str, ...] | None = None
    resume: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigInvalid(
                f"unknown strategy {self.strategy!r}; pick one of {STRATEGIES}"
            )
        if self.query_batch < 1 or self.seed_size < 1:
            raise ConfigInvalid("seed_size and query_batch must be positive")
        if self.budget < 0 or self.budget % self.query_batch != 0:
            raise ConfigInvalid(
                f"budget {self.budget} must be a nonnegative multiple of "
                f"query_batch {self.query_batch}"
            )
        if self.trials < 1:
            raise ConfigInvalid("trials must be at least 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigInvalid("tau must lie in [0, 1]")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigInvalid("dropout must lie in [0, 1)")
        if self.augment_count < 1:
            raise ConfigInvalid("augment_count must be at least 1")
        if self.train_epochs < 0 or self.train_batch < 1:
            raise ConfigInvalid("bad training schedule")
        # constructing the spec validates kind/ratio pairing
        OracleSpec(self.oracle_kind, self.noise_ratio)
        self.calib_spec()
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    def calib_spec(self) -> CalibSpec:
        if self.strategy == "asklearn_vwcc":
            return CalibSpec("vwcc", weight=self.calib_weight, passes=self.calib_passes)
        if self.strategy == "asklearn_lwcc":
            return CalibSpec("lwcc", weight=self.calib_weight, passes=self.calib_passes)
        return CalibSpec("none")

    @classmethod
    def from_dict(cls, raw: dict, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        merged = dict(raw)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        missing = {"train_images", "train_labels", "test_images", "test_labels"} - set(
            merged
        )
        if missing:
            raise ConfigInvalid(f"config missing required keys: {sorted(missing)}")
        return cls(**merged)

    @classmethod
    def from_json(cls, path: str, **overrides) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalid(f"{path}: top level must be a JSON object")
        return cls.from_dict(raw, **overrides)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hidden_dims"] = list(self.hidden_dims)
        if self.class_names is not None:
            out["class_names"] = list(self.class_names)
        return out


@dataclass(frozen=True)
class RoundRecord:
    """Metrics snapshot after one committed round."""

    round_index: int
    labeled_count: int
    accuracy: float
    ece: float
    nll: float
    brier: float
    wall_ms: float
    strategy: str
    trial_seed: int

    def to_dict(self) -> dict:
        return {
            "round": self.round_index,
            "labeled_count": self.labeled_count,
            "accuracy": self.accuracy,
            "ece": self.ece,
            "nll": self.nll,
            "brier": self.brier,
            "wall_ms": self.wall_ms,
            "strategy": self.strategy,
            "trial_seed": self.trial_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        return cls(
            round_index=int(d["round"]),
            labeled_count=int(d["labeled_count"]),
            accuracy=float(d["accuracy"]),
            ece=float(d["ece"]),
            nll=float(d["nll"]),
            brier=float(d["brier"]),
            wall_ms=float(d["wall_ms"]),
            strategy=str(d["strategy"]),
            trial_seed=int(d["trial_seed"]),
        )


class ActiveLearningLoop:
    """Runs Algorithm-style rounds for one trial.

    Constructed from unlabeled train images plus an oracle; the seed pool is
    treated as pre-annotated, so its labels are fetched from the oracle up
    front. All mutation happens at the end of a round: an exception anywhere
    leaves pool, labels, and records exactly as they were.
    """

    def __init__(
        self,
        train_images: np.ndarray,
        test: Dataset,
        oracle: Oracle,
        config: ExperimentConfig,
        trial_seed: int,
        pool: PoolState,
        *,
        session=None,
        checkpoint_path: str | None = None,
    ) -> None:
        self.images = np.asarray(train_images, dtype=np.float64)
        self.test = test
        self.oracle = oracle
        self.config = config
        self.trial_seed = trial_seed
        self.pool = pool
        self.session = session
        self.checkpoint_path = checkpoint_path
        self.records: list[RoundRecord] = []
        self.labels: dict[int, int] = {}
        seed_ids = np.asarray(pool.labeled_ids, dtype=np.int64)
        if pool.rounds_completed == 0:
            for i, lab in zip(seed_ids, oracle.seed_labels(seed_ids)):
                self.labels[int(i)] = int(lab)

    @property
    def num_classes(self) -> int:
        return self.oracle.num_classes

    def _labeled_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        ids = list(self.pool.labeled_ids)
        x = self.images[ids].reshape(len(ids), -1)
        y = np.array([self.labels[i] for i in ids], dtype=np.int64)
        return x, y

    def _fresh_model(self, round_index: int) -> MlpModel:
        dims = [self.images.shape[1] * self.images.shape[2]]
        dims += list(self.config.hidden_dims)
        dims += [self.num_classes]
        return MlpModel(
            dims,
            dropout_rate=self.config.dropout,
            rng=derive_rng(self.trial_seed, round_index, "model"),
        )

    def _select(self, model: MlpModel, round_index: int) -> QueryBatch:
        cfg = self.config
        unlabeled = np.asarray(self.pool.unlabeled_ids, dtype=np.int64)
        pool_images = self.images[unlabeled]
        flat = pool_images.reshape(len(unlabeled), -1)
        if cfg.strategy in ("asklearn_vwcc", "asklearn_lwcc", "badge"):
            tau = 0.0 if cfg.strategy == "badge" else cfg.tau
            report = refine_labels(
                model,
                pool_images,
                tau,
                cfg.augment_count,
                derive_rng(self.trial_seed, round_index, "augment"),
            )
            trace = model.forward(flat, mode="eval")
            emb = grad_embed(
                trace.probs,
                trace.penultimate,
                report.labels,
                sample_ids=unlabeled,
                source_round=round_index,
            )
            return kmeanspp_select(
                emb,
                cfg.query_batch,
                derive_rng(self.trial_seed, round_index, "select"),
                strategy=cfg.strategy,
                round_index=round_index,
            )
        if cfg.strategy == "entropy":
            probs = model.forward(flat, mode="eval").probs
            return entropy_select(
                probs, cfg.query_batch, ids=unlabeled, round_index=round_index
            )
        if cfg.strategy == "confidence":
            probs = model.forward(flat, mode="eval").probs
            return confidence_select(
                probs, cfg.query_batch, ids=unlabeled, round_index=round_index
            )
        return random_select(
            unlabeled,
            cfg.query_batch,
            derive_rng(self.trial_seed, round_index, "select"),
            round_index=round_index,
        )

    def run_round(self) -> RoundRecord:
        cfg = self.config
        round_index = self.pool.rounds_completed + 1
        started = time.perf_counter()
        if self.session is not None:
            self.session.mark_training(
                round_index,
                labeled_count=len(self.pool.labeled_ids),
                budget_remaining=self.pool.budget_remaining,
            )

        model = self._fresh_model(round_index)
        x, y = self._labeled_matrix()
        train(
            model,
            x,
            y,
            cfg.calib_spec(),
            epochs=cfg.train_epochs,
            batch_size=cfg.train_batch,
            learning_rate=cfg.learning_rate,
        )

        query = self._select(model, round_index)
        assignment = self.oracle.annotate(
            query,
            rng=derive_rng(self.trial_seed, round_index, "oracle"),
            images=self.images[list(query.ids)],
        )
        new_pool = commit_query(self.pool, query.ids)

        probs = model.forward(self.test.flat_images(), mode="eval").probs
        report = evaluate(probs, self.test.labels, cfg.ece_bins)
        record = RoundRecord(
            round_index=round_index,
            labeled_count=len(new_pool.labeled_ids),
            accuracy=report.accuracy,
            ece=report.ece,
            nll=report.nll,
            brier=report.brier,
            wall_ms=(time.perf_counter() - started) * 1000.0,
            strategy=cfg.strategy,
            trial_seed=self.trial_seed,
        )

        self.pool = new_pool
        for i, lab in assignment.pairs:
            self.labels[i] = lab
        self.records.append(record)
        if self.checkpoint_path:
            self.save_checkpoint(self.checkpoint_path)
        if self.session is not None:
            self.session.record_round(
                record.to_dict(),
                labeled_count=len(new_pool.labeled_ids),
                budget_remaining=new_pool.budget_remaining,
            )
        return record

    def run(self) -> list[RoundRecord]:
        while self.pool.budget_remaining >= self.pool.batch_size:
            self.run_round()
        return list(self.records)

    def save_checkpoint(self, path: str) -> None:
        state = {
            "trial_seed": self.trial_seed,
            "strategy": self.config.strategy,
            "num_train": self.pool.num_train,
            "seed_size": self.pool.seed_size,
            "batch_size": self.pool.batch_size,
            "budget_remaining": self.pool.budget_remaining,
            "rounds_completed": self.pool.rounds_completed,
            "labeled_ids": list(self.pool.labeled_ids),
            "labels": {str(i): lab for i, lab in self.labels.items()},
            "records": [r.to_dict() for r in self.records],
        }
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(state, f)
        Path(tmp).replace(path)

    @classmethod
    def resume(
        cls,
        path: str,
        train_images: np.ndarray,
        test: Dataset,
        oracle: Oracle,
        config: ExperimentConfig,
        *,
        session=None,
    ) -> "ActiveLearningLoop":
        """Rebuild a loop from a round checkpoint.

        The unlabeled pool is every train index not in the checkpoint's
        labeled list, ascending: that matches live behavior because pools
        start ascending and commits preserve relative order.
        """
        with open(path, "r", encoding="utf-8") as f:
            state = json.load(f)
        labeled = [int(i) for i in state["labeled_ids"]]
        taken = set(labeled)
        unlabeled = tuple(
            i for i in range(int(state["num_train"])) if i not in taken
        )
        pool = PoolState(
            labeled_ids=tuple(labeled),
            unlabeled_ids=unlabeled,
            seed_size=int(state["seed_size"]),
            budget_remaining=int(state["budget_remaining"]),
            batch_size=int(state["batch_size"]),
            rounds_completed=int(state["rounds_completed"]),
        )
        loop = cls(
            train_images,
            test,
            oracle,
            config,
            int(state["trial_seed"]),
            pool,
            session=session,
            checkpoint_path=path,
        )
        loop.labels = {int(i): int(lab) for i, lab in state["labels"].items()}
        loop.records = [RoundRecord.from_dict(d) for d in state["records"]]
        return loop


def _format_row(values: list) -> list[str]:
    out = []
    for v in values:
        if isinstance(v, float):
            out.append(repr(float(v)))
        else:
            out.append(str(int(v)))
    return out


def write_trial_csv(path: str, records: list[RoundRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                _format_row(
                    [
                        r.round_index,
                        r.labeled_count,
                        r.accuracy,
                        r.ece,
                        r.nll,
                        r.brier,
                        r.wall_ms,
                    ]
                )
            )


def write_aggregate_csv(path: str, trials: list[list[RoundRecord]]) -> None:
    """Per-round mean and population standard deviation across trials."""
    header = ["round", "labeled_count"]
    for name in ("accuracy", "ece", "nll", "brier", "wall_ms"):
        header += [f"{name}_mean", f"{name}_std"]
    n_rounds = min(len(t) for t in trials)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(n_rounds):
            row: list = [trials[0][i].round_index, trials[0][i].labeled_count]
            for name in ("accuracy", "ece", "nll", "brier", "wall_ms"):
                vals = np.array([getattr(t[i], name) for t in trials])
                row += [float(vals.mean()), float(vals.std())]
            writer.writerow(_format_row(row))


def load_datasets(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Load train/test IDX pairs with a shared class count."""
    train_ds = load_idx(
        config.train_images,
        config.train_labels,
        split="train",
        class_names=config.class_names,
    )
    test_ds = load_idx(
        config.test_images,
        config.test_labels,
        split="test",
        class_names=config.class_names,
    )
    k = max(train_ds.num_classes, test_ds.num_classes)
    return replace(train_ds, num_classes=k), replace(test_ds, num_classes=k)


def _checkpoint_path(config: ExperimentConfig, trial_seed: int) -> str | None:
    if not config.out_dir:
        return None
    return str(
        Path(config.out_dir) / f"{config.strategy}_seed{trial_seed}_checkpoint.json"
    )


def build_loop(
    config: ExperimentConfig,
    train_ds: Dataset,
    test_ds: Dataset,
    trial_seed: int,
    *,
    session=None,
) -> ActiveLearningLoop:
    """Wire one trial: pool, oracle (which keeps the labels), loop (which
    never sees them)."""
    oracle = Oracle(
        OracleSpec(config.oracle_kind, config.noise_ratio),
        train_ds.labels,
        train_ds.num_classes,
        session=session,
    )
    ckpt = _checkpoint_path(config, trial_seed)
    if config.resume and ckpt and Path(ckpt).exists():
        return ActiveLearningLoop.resume(
            ckpt, train_ds.images, test_ds, oracle, config, session=session
        )
    pool = init_pools(
        train_ds,
        config.seed_size,
        derive_rng(trial_seed, 0, "pool"),
        budget=config.budget,
        batch_size=config.query_batch,
    )
    return ActiveLearningLoop(
        train_ds.images,
        test_ds,
        oracle,
        config,
        trial_seed,
        pool,
        session=session,
        checkpoint_path=ckpt,
    )


def run_experiment(
    config: ExperimentConfig, *, session=None
) -> list[list[RoundRecord]]:
    """Run all trials, write per-trial and aggregate CSVs, return records."""
    train_ds, test_ds = load_datasets(config)
    out_dir = Path(config.out_dir) if config.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    all_trials: list[list[RoundRecord]] = []
    for t in range(config.trials):
        trial_seed = config.seed + t
        loop = build_loop(config, train_ds, test_ds, trial_seed, session=session)
        records = loop.run()
        if out_dir:
            write_trial_csv(
                str(out_dir / f"{config.strategy}_seed{trial_seed}.csv"), records
            )
        all_trials.append(records)
    if out_dir:
        write_aggregate_csv(
            str(out_dir / f"{config.strategy}_aggregate.csv"), all_trials
        )
    if session is not None:
        session.finish()
    return all_trials
