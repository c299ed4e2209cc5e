"""Potential-assumption classification, job queue, and triage.

The reference classifier is logistic regression over hashed unigram and
bigram token counts, trained by mini-batch SGD with a seeded shuffle and
early stopping on held-out accuracy. It is deliberately pluggable: anything
honoring tokenize/train/predict/save/load can replace it. Long
identification runs go through a persisted FIFO job queue so they survive
restarts without duplicating candidates.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix

from . import model as m
from .model import (
    CandidateStatus,
    ClassifierModel,
    CommitRecord,
    DataType,
    PaCandidate,
    RepositoryRef,
    ScaRecord,
    Sentence,
    SourceKind,
    TextUnit,
    TrainingConfig,
)
from .segment import SegmenterOptions, segment
from .store import Store, UnknownCollection

DEFAULT_FEATURE_DIM = 2**18
MODEL_FORMAT = "pa-classifier"
MODEL_VERSION = 1

PA_CSV_COLUMNS = (
    "owner",
    "repo_name",
    "author",
    "source_kind",
    "url",
    "score",
    "status",
    "pa_sentence",
)


class PaError(Exception):
    pass


class InsufficientData(PaError):
    pass


class DegenerateLabels(PaError):
    pass


class UnknownCandidate(PaError):
    pass


class AlreadyDecided(PaError):
    pass


class UnknownJob(PaError):
    pass


class PaLabel(str, Enum):
    PA = "pa"
    NOT_PA = "not_pa"


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    label: PaLabel


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


@dataclass(frozen=True)
class PaJob:
    id: int
    repo: RepositoryRef
    data_type: DataType
    scope: list[SourceKind]
    state: JobState
    enqueued_at: datetime
    processed_units: int = 0
    total_units: int = 0
    error: Optional[str] = None


_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on anything that is not a letter or digit."""
    return _TOKEN_RE.findall(text.lower())


def _hash_feature(key: str, dim: int) -> int:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def featurize(text: str, dim: int = DEFAULT_FEATURE_DIM) -> dict[int, float]:
    """Hashed unigram + bigram counts."""
    tokens = tokenize(text)
    counts: Counter[int] = Counter()
    for t in tokens:
        counts[_hash_feature("u:" + t, dim)] += 1
    for a, b in zip(tokens, tokens[1:]):
        counts[_hash_feature("b:" + a + "\x1f" + b, dim)] += 1
    return {i: float(c) for i, c in counts.items()}


def to_csr(feature_dicts: list[dict[int, float]], dim: int) -> csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for fd in feature_dicts:
        for i in sorted(fd):
            indices.append(i)
            data.append(fd[i])
        indptr.append(len(indices))
    return csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(feature_dicts), dim),
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_and_grad(
    weights: np.ndarray, bias: float, X: csr_matrix, y: np.ndarray
) -> tuple[float, np.ndarray, float]:
    """Mean negative log-likelihood and its gradient over one batch."""
    z = X @ weights + bias
    # log(1 + e^z) - y*z, computed stably for both signs of z
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    err = _sigmoid(z) - y
    grad_w = np.asarray(X.T @ err).ravel() / X.shape[0]
    grad_b = float(np.mean(err))
    return loss, grad_w, grad_b


def load_labeled(path) -> list[LabeledSentence]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                item = LabeledSentence(text=data["text"], label=PaLabel(data["label"]))
            except (KeyError, ValueError) as e:
                raise ValueError(f"line {n}: {e}") from e
            if not item.text.strip():
                raise ValueError(f"line {n}: empty sentence")
            out.append(item)
    return out


def save_labeled(items: Iterable[LabeledSentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for it in items:
            f.write(json.dumps({"text": it.text, "label": it.label.value}, ensure_ascii=False) + "\n")


def train(
    dataset: list[LabeledSentence],
    cfg: Optional[TrainingConfig] = None,
    seed: int = 0,
    feature_dim: int = DEFAULT_FEATURE_DIM,
    eval_every: int = 100,
    patience_steps: int = 2000,
) -> tuple[ClassifierModel, dict[str, float]]:
    """Seeded 80/20 split, mini-batch SGD, early stop on held-out accuracy.

    Returns the best-snapshot model and its held-out metrics. Deterministic
    for a given (dataset, cfg, seed).
    """
    cfg = cfg or TrainingConfig()
    labels = Counter(s.label for s in dataset)
    if len(labels) < 2:
        raise DegenerateLabels(f"need both labels, got {sorted(l.value for l in labels)}")
    low = min(labels.values())
    if low < 10:
        raise InsufficientData(f"need >= 10 examples per label, got {dict(labels)}")

    import random

    rng = random.Random(seed)
    order = list(range(len(dataset)))
    rng.shuffle(order)
    n_train = int(len(dataset) * cfg.train_fraction)
    train_idx, heldout_idx = order[:n_train], order[n_train:]

    feats = [featurize(s.text, feature_dim) for s in dataset]
    y_all = np.array([1.0 if s.label is PaLabel.PA else 0.0 for s in dataset])
    X_train = to_csr([feats[i] for i in train_idx], feature_dim)
    y_train = y_all[train_idx]
    X_held = to_csr([feats[i] for i in heldout_idx], feature_dim)
    y_held = y_all[heldout_idx]

    w = np.zeros(feature_dim)
    b = 0.0
    best = (-1.0, 0, w.copy(), b)

    def heldout_accuracy(wv: np.ndarray, bv: float) -> float:
        if X_held.shape[0] == 0:
            return 0.0
        p = _sigmoid(X_held @ wv + bv)
        return float(np.mean((p >= cfg.threshold) == (y_held == 1.0)))

    step = 0
    positions = list(range(len(train_idx)))
    while step < cfg.max_steps:
        rng.shuffle(positions)
        for lo in range(0, len(positions), cfg.batch_size):
            batch = positions[lo : lo + cfg.batch_size]
            Xb = X_train[batch]
            yb = y_train[batch]
            _, grad_w, grad_b = logistic_loss_and_grad(w, b, Xb, yb)
            w -= cfg.learning_rate * grad_w
            b -= cfg.learning_rate * grad_b
            step += 1
            if step % eval_every == 0 or step == cfg.max_steps:
                acc = heldout_accuracy(w, b)
                if acc > best[0]:
                    best = (acc, step, w.copy(), b)
                elif step - best[1] >= patience_steps:
                    step = cfg.max_steps
            if step >= cfg.max_steps:
                break

    _, _, w, b = best
    p_held = _sigmoid(X_held @ w + b)
    pred = p_held >= cfg.threshold
    actual = y_held == 1.0
    tp = float(np.sum(pred & actual))
    fp = float(np.sum(pred & ~actual))
    fn = float(np.sum(~pred & actual))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    metrics = {
        "accuracy": heldout_accuracy(w, b),
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }

    vocab_tokens = sorted({t for i in train_idx for t in tokenize(dataset[i].text)})
    vocabulary = {t: _hash_feature("u:" + t, feature_dim) for t in vocab_tokens}
    trained = ClassifierModel(
        vocabulary=vocabulary,
        feature_dim=feature_dim,
        weights=w.tolist(),
        bias=float(b),
        config=cfg,
        seed=seed,
    )
    return trained, metrics


def predict(classifier: ClassifierModel, sentence_text: str) -> float:
    """Probability the sentence states a potential assumption."""
    feats = featurize(sentence_text, classifier.feature_dim)
    z = classifier.bias + sum(classifier.weights[i] * c for i, c in feats.items())
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


# --------------------------------------------------------------------------
# Model file
# --------------------------------------------------------------------------


def save_model(classifier: ClassifierModel, path) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_dim": classifier.feature_dim,
        "bias": classifier.bias,
        "seed": classifier.seed,
        "config": m.encode(classifier.config),
        "vocabulary": classifier.vocabulary,
        "weights": {str(i): wv for i, wv in enumerate(classifier.weights) if wv != 0.0},
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(doc, f, ensure_ascii=False)
        f.write("\n")
    return str(path)


def load_model(path) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise PaError(f"unsupported model file {doc.get('format')}/{doc.get('version')}")
    dim = doc["feature_dim"]
    weights = [0.0] * dim
    for k, v in doc["weights"].items():
        weights[int(k)] = float(v)
    return ClassifierModel(
        vocabulary={k: int(v) for k, v in doc["vocabulary"].items()},
        feature_dim=dim,
        weights=weights,
        bias=float(doc["bias"]),
        config=m.decode(TrainingConfig, doc["config"]),
        seed=int(doc["seed"]),
    )


def bundled_corpus_path() -> Path:
    return Path(resources.files("scapa").joinpath("data/pa_corpus.jsonl"))


def bundled_model_path() -> Path:
    return Path(resources.files("scapa").joinpath("data/pa_model.json"))


def load_bundled_model() -> ClassifierModel:
    return load_model(bundled_model_path())


# --------------------------------------------------------------------------
# Candidates and jobs
# --------------------------------------------------------------------------


def candidate_id(unit: TextUnit, sentence: Sentence) -> str:
    """Deterministic digest of candidate provenance."""
    h = hashlib.sha1()
    h.update(
        "|".join(
            (unit.source_kind.value, unit.source_url, str(sentence.start), str(sentence.end))
        ).encode("utf-8")
    )
    h.update(unit.text.encode("utf-8"))
    return h.hexdigest()[:16]


def _job_from_state(data: dict) -> PaJob:
    return m.decode(PaJob, data)


# jobs.json is read-modify-write; serialize those cycles within the process
_jobs_mutex = threading.Lock()


def _load_jobs(store: Store) -> tuple[int, list[PaJob]]:
    state = store.load_jobs_state()
    return state["next_id"], [_job_from_state(j) for j in state["jobs"]]


def _save_jobs(store: Store, next_id: int, jobs: list[PaJob]) -> None:
    store.save_jobs_state({"next_id": next_id, "jobs": [m.encode(j) for j in jobs]})


def enqueue_identify(
    store: Store,
    repo: RepositoryRef,
    data_type: DataType,
    scope: Optional[list[SourceKind]] = None,
) -> PaJob:
    with _jobs_mutex:
        next_id, jobs = _load_jobs(store)
        job = PaJob(
            id=next_id,
            repo=repo,
            data_type=data_type,
            scope=list(scope) if scope else [],
            state=JobState.QUEUED,
            enqueued_at=datetime.now(timezone.utc),
        )
        _save_jobs(store, next_id + 1, jobs + [job])
    return job


def job_status(store: Store, job_id: int) -> PaJob:
    _, jobs = _load_jobs(store)
    for job in jobs:
        if job.id == job_id:
            return job
    raise UnknownJob(str(job_id))


def list_jobs(store: Store) -> list[PaJob]:
    return _load_jobs(store)[1]


def _update_job(store: Store, job: PaJob) -> PaJob:
    with _jobs_mutex:
        next_id, jobs = _load_jobs(store)
        jobs = [job if j.id == job.id else j for j in jobs]
        _save_jobs(store, next_id, jobs)
    return job


def run_job(
    store: Store,
    job: PaJob,
    classifier: ClassifierModel,
    opts: Optional[SegmenterOptions] = None,
    threshold: Optional[float] = None,
    progress_every: int = 100,
) -> PaJob:
    """Score every sentence of every scoped unit; persist pending candidates.

    Progress is persisted at least every ``progress_every`` units, and
    candidate ids are deterministic, so an interrupted job resumes (or
    restarts) without duplicates.
    """
    opts = opts or SegmenterOptions()
    threshold = classifier.config.threshold if threshold is None else threshold
    job = _update_job(store, replace(job, state=JobState.RUNNING))
    try:
        units = list(store.get_text_units(job.repo, job.data_type, job.scope or None))
        job = _update_job(store, replace(job, total_units=len(units)))
        buffer: list[PaCandidate] = []
        start = min(job.processed_units, len(units))
        for idx in range(start, len(units)):
            unit = units[idx]
            for sentence in segment(unit.text, opts):
                score = predict(classifier, sentence.text)
                if score >= threshold:
                    buffer.append(
                        PaCandidate(
                            id=candidate_id(unit, sentence),
                            sentence=sentence,
                            unit=unit,
                            score=score,
                        )
                    )
            done = idx + 1
            if done % progress_every == 0 or done == len(units):
                store.upsert_candidates(job.repo, job.data_type, buffer)
                buffer = []
                job = _update_job(store, replace(job, processed_units=done))
        job = _update_job(store, replace(job, state=JobState.DONE, processed_units=len(units)))
        return job
    except Exception as e:  # job-level failure must not kill the queue
        job = _update_job(store, replace(job, state=JobState.FAILED, error=str(e)))
        return job


def run_queue(
    store: Store,
    classifier: ClassifierModel,
    opts: Optional[SegmenterOptions] = None,
    threshold: Optional[float] = None,
    max_jobs: Optional[int] = None,
    progress_every: int = 100,
    worker_count: int = 1,
) -> list[PaJob]:
    """Drain the queue; returns finished jobs.

    One worker by default, which makes completion order equal enqueue
    order. With more workers, jobs are still claimed in FIFO order but may
    finish out of order.
    """
    claimed: set[int] = set()
    claim_lock = threading.Lock()
    finished: list[PaJob] = []
    finished_lock = threading.Lock()

    def claim_next() -> Optional[PaJob]:
        with claim_lock:
            if max_jobs is not None and len(claimed) >= max_jobs:
                return None
            _, jobs = _load_jobs(store)
            runnable = [
                j
                for j in jobs
                if j.state in (JobState.QUEUED, JobState.RUNNING) and j.id not in claimed
            ]
            if not runnable:
                return None
            job = min(runnable, key=lambda j: j.id)
            claimed.add(job.id)
            return job

    def work() -> None:
        while True:
            job = claim_next()
            if job is None:
                return
            done = run_job(store, job, classifier, opts, threshold, progress_every)
            with finished_lock:
                finished.append(done)

    if worker_count <= 1:
        work()
    else:
        threads = [threading.Thread(target=work) for _ in range(worker_count)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    return finished


class QueueWorker:
    """Background thread draining the job queue for the HTTP service."""

    def __init__(
        self,
        store: Store,
        classifier: ClassifierModel,
        opts: Optional[SegmenterOptions] = None,
        poll_s: float = 0.2,
    ):
        self.store = store
        self.classifier = classifier
        self.opts = opts
        self.poll_s = poll_s
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=5)

    def _loop(self) -> None:
        while not self._stop.is_set():
            done = run_queue(self.store, self.classifier, self.opts, max_jobs=1)
            if not done:
                time.sleep(self.poll_s)


# --------------------------------------------------------------------------
# Extraction and triage
# --------------------------------------------------------------------------


def extract_pas(
    store: Store,
    ref: RepositoryRef,
    data_type: DataType,
    path,
    status_filter: Optional[set[CandidateStatus]] = None,
) -> str:
    """Write the PA dataset CSV, rows sorted by score descending."""
    candidates = store.load_candidates(ref, data_type)
    if status_filter:
        candidates = [c for c in candidates if c.status in status_filter]
    candidates.sort(key=lambda c: (-c.score, c.id))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"{ref.slug} {data_type.value} PA extraction"])
        writer.writerow(PA_CSV_COLUMNS)
        for c in candidates:
            writer.writerow(
                [
                    ref.owner,
                    ref.name,
                    c.unit.author,
                    c.unit.source_kind.value,
                    c.unit.source_url,
                    repr(c.score),
                    c.status.value,
                    c.sentence.text,
                ]
            )
    return str(path)


def read_pa_csv(path) -> tuple[str, list[dict]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if len(rows) < 2 or tuple(rows[1]) != PA_CSV_COLUMNS:
        raise ValueError("not a PA dataset file")
    out = []
    for row in rows[2:]:
        data = dict(zip(PA_CSV_COLUMNS, row))
        data["score"] = float(data["score"])
        out.append(data)
    return rows[0][0], out


def triage(store: Store, candidate_id_: str, decision: str, user: str) -> PaCandidate:
    """confirm -> SCA dataset row appended; reject -> just marked. Both stamp
    the deciding user and time; a candidate can be decided exactly once."""
    found = store.find_candidate(candidate_id_)
    if found is None:
        raise UnknownCandidate(candidate_id_)
    ref, data_type, cand = found
    if cand.status is not CandidateStatus.PENDING:
        raise AlreadyDecided(f"{candidate_id_} is already {cand.status.value}")
    if decision not in ("confirm", "reject"):
        raise ValueError(f"decision must be confirm or reject, got {decision!r}")
    status = CandidateStatus.CONFIRMED if decision == "confirm" else CandidateStatus.REJECTED
    updated = replace(
        cand,
        status=status,
        decided_by=user,
        decided_at=datetime.now(timezone.utc),
    )
    store.replace_candidate(ref, data_type, updated)
    if status is CandidateStatus.CONFIRMED:
        store.append_confirmed_sca(ref, _sca_from_candidate(store, ref, data_type, updated))
    return updated


def _sca_from_candidate(
    store: Store, ref: RepositoryRef, data_type: DataType, cand: PaCandidate
) -> ScaRecord:
    record = None
    try:
        for r in store.get_records(ref, data_type):
            if r.url == cand.unit.source_url:
                record = r
                break
    except UnknownCollection:
        pass
    if data_type is DataType.COMMIT:
        message = record.message if isinstance(record, CommitRecord) else cand.unit.text
        return ScaRecord(
            owner=ref.owner,
            repo_name=ref.name,
            url=cand.unit.source_url,
            sca_sentence=cand.sentence.text,
            author_name=record.author_name if isinstance(record, CommitRecord) else cand.unit.author,
            message=message,
        )
    return ScaRecord(
        owner=ref.owner,
        repo_name=ref.name,
        url=cand.unit.source_url,
        sca_sentence=cand.sentence.text,
        author=record.author if record is not None else cand.unit.author,
        title=record.title if record is not None else "",
        state=record.state.value if record is not None else "",
    )
