"""Classifier, job queue, and triage behaviour."""

import random

import numpy as np
import pytest

from scapa import pa
from scapa.model import (
    CandidateStatus,
    DataType,
    SourceKind,
    TrainingConfig,
)
from scapa.pa import (
    AlreadyDecided,
    DegenerateLabels,
    InsufficientData,
    JobState,
    LabeledSentence,
    PaLabel,
    UnknownCandidate,
    enqueue_identify,
    extract_pas,
    featurize,
    job_status,
    load_labeled,
    logistic_loss_and_grad,
    predict,
    run_queue,
    to_csr,
    tokenize,
    train,
    triage,
)
from scapa.segment import segment
from conftest import make_commit, make_issue


def small_corpus(n_per_class=30):
    pos = [f"i think the {w} should probably change" for w in
           ("parser", "loader", "cache", "queue", "planner", "router")]
    neg = [f"fixed the {w} and updated the test" for w in
           ("parser", "loader", "cache", "queue", "planner", "router")]
    out = []
    for k in range(n_per_class):
        out.append(LabeledSentence(f"{pos[k % len(pos)]} case {k}", PaLabel.PA))
        out.append(LabeledSentence(f"{neg[k % len(neg)]} case {k}", PaLabel.NOT_PA))
    return out


def quick_cfg(**kw):
    defaults = dict(max_steps=400, learning_rate=0.5)
    defaults.update(kw)
    return TrainingConfig(**defaults)


def test_tokenize_rules():
    assert tokenize("The system will NOT crash!") == ["the", "system", "will", "not", "crash"]
    assert tokenize("") == []
    assert tokenize("tf.nn.relu v2") == ["tf", "nn", "relu", "v2"]
    assert tokenize("snake_case splits") == ["snake", "case", "splits"]


def test_featurize_deterministic_across_calls():
    a = featurize("the cache should be warm", 2**10)
    b = featurize("the cache should be warm", 2**10)
    assert a == b and a


def test_gradient_check_against_finite_differences():
    rng = np.random.default_rng(42)
    dim = 32
    for _ in range(25):
        n = int(rng.integers(1, 6))
        rows = []
        for _ in range(n):
            k = int(rng.integers(1, 21))
            idx = rng.choice(dim, size=min(k, dim), replace=False)
            rows.append({int(i): float(rng.integers(1, 4)) for i in idx})
        X = to_csr(rows, dim)
        y = rng.integers(0, 2, size=n).astype(float)
        w = rng.normal(size=dim)
        b = float(rng.normal())
        _, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y)
        eps = 1e-5
        for i in np.nonzero(np.asarray(X.sum(axis=0)).ravel())[0]:
            wp, wm = w.copy(), w.copy()
            wp[i] += eps
            wm[i] -= eps
            lp, _, _ = logistic_loss_and_grad(wp, b, X, y)
            lm, _, _ = logistic_loss_and_grad(wm, b, X, y)
            fd = (lp - lm) / (2 * eps)
            denom = max(abs(fd) + abs(grad_w[i]), 1e-6)
            assert abs(fd - grad_w[i]) / denom < 1e-4
        lp, _, _ = logistic_loss_and_grad(w, b + eps, X, y)
        lm, _, _ = logistic_loss_and_grad(w, b - eps, X, y)
        fd_b = (lp - lm) / (2 * eps)
        assert abs(fd_b - grad_b) / max(abs(fd_b) + abs(grad_b), 1e-6) < 1e-4


def test_train_is_deterministic_given_seed():
    corpus = small_corpus()
    m1, _ = train(corpus, quick_cfg(), seed=3, feature_dim=2**12)
    m2, _ = train(corpus, quick_cfg(), seed=3, feature_dim=2**12)
    assert m1.weights == m2.weights
    assert m1.bias == m2.bias


def test_train_label_errors():
    single = [LabeledSentence(f"sentence {i}", PaLabel.PA) for i in range(30)]
    with pytest.raises(DegenerateLabels):
        train(single, quick_cfg())
    thin = small_corpus(4)
    with pytest.raises(InsufficientData):
        train(thin, quick_cfg())


def test_predict_range_and_learnability():
    model, metrics = train(small_corpus(40), quick_cfg(), seed=1, feature_dim=2**12)
    assert metrics["accuracy"] >= 0.9
    for text in ("i think this should change", "fixed the tests", ""):
        score = predict(model, text)
        assert 0.0 <= score <= 1.0
    assert predict(model, "i think the planner should probably change") >= 0.5
    assert predict(model, "fixed the planner and updated the test") < 0.5


def test_model_save_load_identical_predictions(tmp_path):
    model, _ = train(small_corpus(20), quick_cfg(), seed=5, feature_dim=2**12)
    path = tmp_path / "model.json"
    pa.save_model(model, path)
    loaded = pa.load_model(path)
    assert loaded == model
    rng = random.Random(0)
    vocab = "think should fixed updated cache loader crash maybe will the a".split()
    for _ in range(1000):
        text = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 15)))
        assert predict(loaded, text) == predict(model, text)


def test_corpus_loader_rejects_bad_lines(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"text": "ok", "label": "pa"}\n{"text": "", "label": "pa"}\n')
    with pytest.raises(ValueError, match="line 2"):
        load_labeled(path)


def test_bundled_corpus_is_large_and_balanced():
    corpus = load_labeled(pa.bundled_corpus_path())
    assert len(corpus) >= 400
    labels = {l for l in (s.label for s in corpus)}
    assert labels == {PaLabel.PA, PaLabel.NOT_PA}


# -- jobs ----------------------------------------------------------------------


@pytest.fixture
def trained():
    model, _ = train(small_corpus(40), quick_cfg(), seed=1, feature_dim=2**12)
    return model


def seed_issues(store, ref, texts):
    issues = [make_issue(i + 1, body=t) for i, t in enumerate(texts)]
    store.put_batch(ref, DataType.ISSUE, issues)
    return issues


def test_jobs_run_fifo(store, ref, trained):
    seed_issues(store, ref, ["i think the cache should probably change"] * 3)
    a = enqueue_identify(store, ref, DataType.ISSUE, [SourceKind.ISSUE_BODY])
    b = enqueue_identify(store, ref, DataType.ISSUE, [SourceKind.ISSUE_TITLE])
    assert a.id < b.id
    finished = run_queue(store, trained)
    assert [j.id for j in finished] == [a.id, b.id]
    assert all(j.state is JobState.DONE for j in finished)
    assert job_status(store, a.id).state is JobState.DONE


def test_job_candidate_counts_match_direct_scoring(store, ref, trained):
    texts = [
        "i think the loader should probably change. fixed the cache and updated the test.",
        "fixed the router and updated the test",
        "i think the queue should probably change",
    ]
    seed_issues(store, ref, texts)
    job = enqueue_identify(store, ref, DataType.ISSUE, [SourceKind.ISSUE_BODY])
    run_queue(store, trained)

    threshold = trained.config.threshold
    expected = 0
    for unit in store.get_text_units(ref, DataType.ISSUE, [SourceKind.ISSUE_BODY]):
        for s in segment(unit.text):
            if predict(trained, s.text) >= threshold:
                expected += 1
    got = store.load_candidates(ref, DataType.ISSUE)
    assert len(got) == expected > 0
    assert all(c.status is CandidateStatus.PENDING for c in got)
    assert job_status(store, job.id).total_units == 3


def test_job_failure_marks_failed_and_queue_continues(store, ref, trained):
    # no data collected for PR -> the job fails, the next one still runs
    seed_issues(store, ref, ["i think the cache should probably change"])
    bad = enqueue_identify(store, ref, DataType.PR)
    good = enqueue_identify(store, ref, DataType.ISSUE, [SourceKind.ISSUE_BODY])
    finished = run_queue(store, trained)
    states = {j.id: j.state for j in finished}
    assert states[bad.id] is JobState.FAILED
    assert states[good.id] is JobState.DONE
    assert job_status(store, bad.id).error


def test_job_resume_after_kill_no_duplicates(store, ref, trained, monkeypatch):
    texts = [f"i think unit {i} should probably change" for i in range(40)]
    seed_issues(store, ref, texts)

    # clean run on a parallel store for the expected id set
    from scapa.store import Store

    clean = Store(store.root.parent / "clean")
    seed_issues(clean, ref, texts)
    enqueue_identify(clean, ref, DataType.ISSUE, [SourceKind.ISSUE_BODY])
    run_queue(clean, trained, progress_every=7)
    expected_ids = sorted(c.id for c in clean.load_candidates(ref, DataType.ISSUE))

    enqueue_identify(store, ref, DataType.ISSUE, [SourceKind.ISSUE_BODY])
    real_upsert = store.upsert_candidates
    flushes = {"n": 0}

    def dying_upsert(*args, **kw):
        flushes["n"] += 1
        if flushes["n"] == 3:
            raise KeyboardInterrupt()  # hard kill: bypasses the job's error handling
        return real_upsert(*args, **kw)

    monkeypatch.setattr(store, "upsert_candidates", dying_upsert)
    with pytest.raises(KeyboardInterrupt):
        run_queue(store, trained, progress_every=7)
    monkeypatch.setattr(store, "upsert_candidates", real_upsert)

    interrupted = pa.list_jobs(store)[0]
    assert interrupted.state is JobState.RUNNING
    assert 0 < interrupted.processed_units < 40

    finished = run_queue(store, trained, progress_every=7)
    assert finished[-1].state is JobState.DONE
    got_ids = sorted(c.id for c in store.load_candidates(ref, DataType.ISSUE))
    assert got_ids == expected_ids
    assert len(got_ids) == len(set(got_ids))


# -- triage ---------------------------------------------------------------------


def seeded_candidates(store, ref, trained, n=3):
    seed_issues(store, ref, [f"i think case {i} should probably change" for i in range(n)])
    enqueue_identify(store, ref, DataType.ISSUE, [SourceKind.ISSUE_BODY])
    run_queue(store, trained)
    return store.load_candidates(ref, DataType.ISSUE)


def test_triage_confirm_appends_sca(store, ref, trained):
    cands = seeded_candidates(store, ref, trained)
    assert cands
    before = len(store.load_confirmed_scas(ref))
    updated = triage(store, cands[0].id, "confirm", "alice")
    assert updated.status is CandidateStatus.CONFIRMED
    assert updated.decided_by == "alice"
    assert updated.decided_at is not None
    confirmed = store.load_confirmed_scas(ref)
    assert len(confirmed) == before + 1
    assert confirmed[-1].sca_sentence == cands[0].sentence.text
    assert confirmed[-1].title  # provenance recovered from the source record


def test_triage_reject_leaves_dataset_unchanged(store, ref, trained):
    cands = seeded_candidates(store, ref, trained)
    before = len(store.load_confirmed_scas(ref))
    updated = triage(store, cands[1].id, "reject", "bob")
    assert updated.status is CandidateStatus.REJECTED
    assert len(store.load_confirmed_scas(ref)) == before


def test_triage_double_decision_rejected(store, ref, trained):
    cands = seeded_candidates(store, ref, trained)
    triage(store, cands[0].id, "confirm", "alice")
    with pytest.raises(AlreadyDecided):
        triage(store, cands[0].id, "reject", "alice")
    with pytest.raises(UnknownCandidate):
        triage(store, "no-such-id", "confirm", "alice")


def test_triage_commit_candidate_uses_commit_variant(store, ref, trained):
    commits = [make_commit(1, message="i think the cache should probably change")]
    store.put_batch(ref, DataType.COMMIT, commits)
    enqueue_identify(store, ref, DataType.COMMIT)
    run_queue(store, trained)
    cands = store.load_candidates(ref, DataType.COMMIT)
    assert cands
    triage(store, cands[0].id, "confirm", "carol")
    row = store.load_confirmed_scas(ref)[-1]
    assert row.is_commit_variant
    assert row.author_name == commits[0].author_name
    assert row.message == commits[0].message


# -- PA dataset CSV ----------------------------------------------------------------


def test_extract_pas_filter_and_round_trip(store, ref, trained, tmp_path):
    cands = seeded_candidates(store, ref, trained, n=4)
    triage(store, cands[0].id, "confirm", "alice")
    path = tmp_path / "pa.csv"
    extract_pas(store, ref, DataType.ISSUE, path, {CandidateStatus.PENDING})
    title, rows = pa.read_pa_csv(path)
    assert title == f"{ref.slug} issue PA extraction"
    assert len(rows) == len(cands) - 1
    scores = [r["score"] for r in rows]
    assert scores == sorted(scores, reverse=True)
    stored = {c.id: c for c in store.load_candidates(ref, DataType.ISSUE)}
    for row in rows:
        match = [c for c in stored.values() if c.sentence.text == row["pa_sentence"]]
        assert match and match[0].score == row["score"]
        assert row["status"] == "pending"


def test_extract_pas_empty_set(store, ref, tmp_path):
    store.put_batch(ref, DataType.ISSUE, [make_issue(1)])
    path = tmp_path / "empty.csv"
    extract_pas(store, ref, DataType.ISSUE, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2  # title + header only


def test_multi_worker_queue_claims_fifo_and_finishes_all(store, ref, trained):
    from scapa.model import DataType as DT

    for batch in range(4):
        texts = [f"i think batch {batch} unit {i} should probably change" for i in range(5)]
        issues = [make_issue(batch * 10 + i + 1, body=t) for i, t in enumerate(texts)]
        store.put_batch(ref, DT.ISSUE, issues)
    jobs = [enqueue_identify(store, ref, DT.ISSUE, [SourceKind.ISSUE_BODY]) for _ in range(4)]
    finished = run_queue(store, trained, worker_count=3)
    assert sorted(j.id for j in finished) == [j.id for j in jobs]
    assert all(j.state is JobState.DONE for j in finished)
