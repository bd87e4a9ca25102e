"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -v -s tests/test_acceptance.py` to see the per-criterion
report.  Every tolerance is pinned here; the runtime budgets are asserted.

Known red: the proposal-optimality criterion at alpha = 0.25.  The
second-moment objective sum_y c_y * phi_y^(1 - 2*alpha) is concave in phi
for 2*alpha < 1, so the power-mean stationary point is the constrained
MAXIMUM there, and random perturbations lower the moment.  The criterion
is asserted as specified and fails honestly at that setting (see the
alpha = 0.5 and alpha = 1.0 legs for the regimes where minimality holds).
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import accuracy_oracle, ari_oracle, nmi_oracle

from gckit.core import LogProbMatrix, Params, Proposal, preprocess
from gckit.engine import cluster, cluster_best_of
from gckit.hierarchy import (
    assign_prefix_codes,
    bootstrap_texts,
    build_tree,
    resample_weights,
)
from gckit.metrics import accuracy, ari, nmi
from gckit.synth import (
    exact_kl_matrix,
    generate_hierarchical_instance,
    generate_instance,
    inject_outliers,
    optimal_proposal_on_space,
    ris_estimate_matrix,
    sample_texts_from_prior,
    second_moment,
)


def report(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {name}: {status}" + (f"  [{detail}]" if detail else ""))
    return ok


def mean_planted_ari(seeds, *, alpha=0.25, clip=True, naive=False,
                     make_matrix=None, init="random", restarts=10, K=3):
    values = []
    for s in seeds:
        rng = np.random.default_rng(1000 + s)
        inst = generate_instance(K_true=K, n_docs=60, M=1000, concentration=0.02,
                                 noise=0.75, J=64, rng=rng)
        P = make_matrix(inst, s) if make_matrix else inst.P
        params = Params(K=K, alpha=alpha, restarts=restarts, seed=s)
        res = cluster_best_of(P, params, init, clip=clip, naive=naive)
        values.append(ari(inst.true_labels, res.assignment.labels))
    return float(np.mean(values))


class TestConvergence:
    def test_monotone_and_terminating(self):
        """Total distortion is non-increasing at every iteration (1e-9
        relative slack) over 100 random instances; everything terminates."""
        t0 = time.time()
        rng = np.random.default_rng(0)
        violations = 0
        for trial in range(100):
            inst = generate_instance(
                K_true=int(rng.integers(2, 6)),
                n_docs=int(rng.integers(20, 301)),
                M=int(rng.integers(10, 101)),
                concentration=float(rng.uniform(0.1, 2.0)),
                noise=float(rng.uniform(0.0, 0.5)),
                J=int(rng.integers(32, 257)),
                rng=rng,
            )
            K = int(rng.integers(2, 6))
            res = cluster(inst.P, Params(K=min(K, inst.n_docs), restarts=1, seed=trial))
            h = res.assignment.history
            assert len(h) >= 1 and res.assignment.iterations <= 300
            for prev, cur in zip(h, h[1:]):
                if cur > prev + 1e-9 * abs(prev):
                    violations += 1
        elapsed = time.time() - t0
        ok = violations == 0 and elapsed < 60.0
        assert report("convergence", ok, f"{violations} violations, {elapsed:.1f}s")


class TestCentroidOptimality:
    def test_no_perturbation_beats_update(self):
        """1000 random normalized perturbations per cluster never improve
        the within-cluster distortion of the closed-form centroid."""
        t0 = time.time()
        rng = np.random.default_rng(1)
        failures = 0
        for run_idx in range(20):
            inst = generate_instance(
                K_true=3, n_docs=int(rng.integers(30, 120)), M=60,
                concentration=0.5, noise=float(rng.uniform(0.1, 0.5)),
                J=96, rng=rng)
            params = Params(K=3, restarts=1, seed=run_idx)
            res = cluster(inst.P, params)
            assert res.assignment.converged
            pre = preprocess(inst.P, params)
            J = pre.P.n_texts
            for k in range(3):
                members = res.assignment.labels == k
                if not members.any():
                    continue
                w_k = pre.W.values[members].sum(axis=0)
                c_star = res.centroids.centroids[k]
                base = -np.dot(w_k, np.log(c_star)) / J
                t = rng.uniform(0.0, 0.09, size=1000)
                u = rng.dirichlet(np.ones(J), size=1000)
                perts = (1 - t[:, None]) * c_star[None, :] + t[:, None] * u
                vals = -(np.log(perts) @ w_k) / J
                failures += int((vals < base - 1e-9 * abs(base)).sum())
        elapsed = time.time() - t0
        ok = failures == 0 and elapsed < 60.0
        assert report("centroid-optimality", ok, f"{failures} wins by perturbations, {elapsed:.1f}s")


class TestProposalOptimality:
    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
    def test_power_mean_minimizes_second_moment(self, alpha):
        """The power-mean proposal attains the minimal exact second moment
        against 100 normalized perturbations on 20 finite-space instances."""
        t0 = time.time()
        rng = np.random.default_rng(2)
        wins = 0
        total = 0
        for idx in range(20):
            inst = generate_instance(
                K_true=3, n_docs=12, M=30, concentration=0.5,
                noise=0.3, J=4, rng=rng)
            phi_star = optimal_proposal_on_space(inst, alpha)
            m_star = second_moment(phi_star, inst, alpha)
            star = np.exp(phi_star.log_phi - np.logaddexp.reduce(phi_star.log_phi))
            for _ in range(100):
                t = rng.uniform(0.0, 0.09)
                pert = (1 - t) * star + t * rng.dirichlet(np.ones(inst.M))
                m_pert = second_moment(Proposal(log_phi=np.log(pert)), inst, alpha)
                total += 1
                wins += int(m_star <= m_pert + 1e-9 * abs(m_pert))
        elapsed = time.time() - t0
        ok = wins == total and elapsed < 120.0
        assert report(
            f"proposal-optimality[alpha={alpha}]", ok,
            f"minimal in {wins}/{total}, {elapsed:.1f}s")


class TestEstimatorConsistency:
    def test_unbiased_at_alpha_one(self):
        """|mean of 50 trials - exact KL| <= 3 standard errors at J=4096."""
        t0 = time.time()
        inst = generate_instance(K_true=2, n_docs=10, M=30, concentration=1.0,
                                 noise=0.3, J=8, rng=np.random.default_rng(9))
        exact = exact_kl_matrix(inst)
        rng = np.random.default_rng(10)
        trials = 50
        est = np.empty((trials,) + exact.shape)
        for t in range(trials):
            ids = sample_texts_from_prior(inst.doc_dists, 4096, rng)
            est[t] = ris_estimate_matrix(inst, ids, 1.0, proposal="exact")
        se = est.std(axis=0, ddof=1) / np.sqrt(trials)
        z = float((np.abs(est.mean(axis=0) - exact) / se).max())
        elapsed = time.time() - t0
        ok = z <= 3.0
        assert report("estimator-consistency", ok, f"max |z| = {z:.2f}, {elapsed:.1f}s")


class TestBiasVarianceDirection:
    def test_low_alpha_beats_unbiased_on_skewed_instances(self):
        """Right-skewed documents: mean planted ARI at alpha=0.25 exceeds
        alpha=1.0 over 20 seeds."""
        t0 = time.time()
        seeds = range(20)
        a_low = mean_planted_ari(seeds, alpha=0.25)
        a_high = mean_planted_ari(seeds, alpha=1.0)
        elapsed = time.time() - t0
        ok = a_low > a_high
        assert report("bias-variance-direction", ok,
                      f"ARI {a_low:.3f} (a=0.25) vs {a_high:.3f} (a=1.0), {elapsed:.1f}s")


class TestAblationDirections:
    def test_disabling_clipping_reduces_ari(self):
        """Source-document outliers planted in every column of a deep
        (length-scaled) matrix: clipping recovers accuracy."""
        t0 = time.time()

        def planted(seeds, clip):
            values = []
            for s in seeds:
                rng = np.random.default_rng(2000 + s)
                inst = generate_instance(K_true=4, n_docs=200, M=150,
                                         concentration=30.0, noise=0.55,
                                         J=96, rng=rng)
                deep = LogProbMatrix.from_array(inst.P.values * 8.0)
                P = inject_outliers(deep, np.random.default_rng(555 + s),
                                    n_columns=96, delta=12.0)
                params = Params(K=4, alpha=0.25, restarts=10, seed=s)
                res = cluster_best_of(P, params, clip=clip)
                values.append(ari(inst.true_labels, res.assignment.labels))
            return float(np.mean(values))

        seeds = range(20)
        with_clip = planted(seeds, True)
        without = planted(seeds, False)
        elapsed = time.time() - t0
        ok = with_clip > without
        assert report("ablation-clipping", ok,
                      f"ARI {with_clip:.3f} clipped vs {without:.3f} unclipped, {elapsed:.1f}s")

    def test_naive_proposal_margin_smaller_than_alpha_margin(self):
        """The naive-proposal ablation moves the result less than the
        alpha=1 ablation does."""
        t0 = time.time()
        seeds = range(20)
        default = mean_planted_ari(seeds)
        naive = mean_planted_ari(seeds, naive=True)
        alpha1 = mean_planted_ari(seeds, alpha=1.0)
        elapsed = time.time() - t0
        ok = abs(default - naive) < abs(default - alpha1)
        assert report(
            "ablation-ordering", ok,
            f"|naive margin| {abs(default-naive):.3f} < |alpha margin| "
            f"{abs(default-alpha1):.3f}, {elapsed:.1f}s")


class TestPlantedRecovery:
    def test_recovery_rate(self):
        """K=5, 40 docs/cluster, noise 0.05, J=1024, 10 restarts:
        ARI >= 0.99 in at least 95 of 100 seeds."""
        t0 = time.time()
        hits = 0
        for s in range(100):
            rng = np.random.default_rng(10_000 + s)
            inst = generate_instance(K_true=5, n_docs=200, M=400,
                                     concentration=0.2, noise=0.05,
                                     J=1024, rng=rng)
            params = Params(K=5, restarts=10, seed=s)
            res = cluster_best_of(inst.P, params, "kmeanspp")
            hits += ari(inst.true_labels, res.assignment.labels) >= 0.99
        elapsed = time.time() - t0
        ok = hits >= 95 and elapsed < 300.0
        assert report("planted-recovery", ok, f"{hits}/100, {elapsed:.1f}s")


class TestMetricsCorrectness:
    def test_thousand_random_trials_match_oracles(self):
        """ACC/NMI/ARI equal permutation- and pair-enumeration oracles to
        1e-12 over 1000 random labelings (K <= 6, n <= 50)."""
        t0 = time.time()
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 51))
            truth = rng.integers(0, int(rng.integers(1, 7)), size=n)
            pred = rng.integers(0, int(rng.integers(1, 7)), size=n)
            worst = max(worst, abs(accuracy(truth, pred) - accuracy_oracle(truth, pred)))
            worst = max(worst, abs(nmi(truth, pred) - nmi_oracle(truth, pred)))
            worst = max(worst, abs(ari(truth, pred) - ari_oracle(truth, pred)))
        elapsed = time.time() - t0
        ok = worst <= 1e-12
        assert report("metrics-correctness", ok, f"max |err| = {worst:.2e}, {elapsed:.1f}s")


class TestHierarchy:
    def test_prefix_codes_unique_and_consistent(self):
        t0 = time.time()
        ok = True
        for s in range(5):
            rng = np.random.default_rng(30_000 + s)
            inst = generate_instance(K_true=4, n_docs=int(rng.integers(30, 80)),
                                     M=60, concentration=0.4, noise=0.2,
                                     J=128, rng=rng)
            tree = build_tree(inst.P, Params(K=3, restarts=2, seed=s), leaf_threshold=4)
            codes = assign_prefix_codes(tree, doc_ids=inst.P.doc_ids)
            strings = [c.as_string() for c in codes]
            ok &= len(set(strings)) == len(strings)

            ancestors = {}

            def walk(node, path):
                for row in node.doc_rows:
                    ancestors.setdefault(int(row), []).append(path)
                for digit, child in zip(node.child_digits, node.children):
                    walk(child, path + (digit,))

            walk(tree, ())
            digits = {i: c.digits for i, c in enumerate(codes)}
            n = inst.n_docs
            for u in range(n):
                for v in range(u + 1, n):
                    L = min(len(digits[u]), len(digits[v]))
                    for depth in range(1, L + 1):
                        same_prefix = digits[u][:depth] == digits[v][:depth]
                        same_node = (
                            depth < len(ancestors[u]) and depth < len(ancestors[v])
                            and ancestors[u][depth] == ancestors[v][depth])
                        ok &= same_prefix == same_node
        elapsed = time.time() - t0
        assert report("hierarchy-prefix-codes", ok, f"5 trees, {elapsed:.1f}s")

    def test_bootstrap_chi_square(self):
        """Empirical bootstrap frequencies match the ratio weights at 1e5
        draws (chi-square p > 0.01)."""
        t0 = time.time()
        rng = np.random.default_rng(4)
        phi = Proposal(log_phi=np.log(rng.dirichlet(np.ones(8))))
        loc = Proposal(log_phi=np.log(rng.dirichlet(np.ones(8))))
        rw = resample_weights(phi, loc, 0.25)
        draws = bootstrap_texts(rw, 100_000, np.random.default_rng(5))
        counts = np.bincount(draws, minlength=8)
        _, p = chisquare(counts, 100_000 * rw.normalized_r)
        elapsed = time.time() - t0
        ok = p > 0.01
        assert report("hierarchy-bootstrap", ok, f"chi-square p = {p:.3f}, {elapsed:.1f}s")

    def test_localized_phi_variance(self):
        """Sampling from the localized proposal lowers the per-pair
        estimator variance on >= 60% of (document, centroid) pairs."""
        t0 = time.time()
        from scipy.special import logsumexp

        rng0 = np.random.default_rng(11)
        h = generate_hierarchical_instance(
            K_top=4, subs_per=2, n_per_sub=10, M=600, concentration=0.02,
            mix=0.7, noise=0.15, J=8, rng=rng0)
        docs, subs = h.doc_dists, h.sub_dists
        rows = np.where(h.top_labels == 0)[0]
        alpha, J, trials = 0.25, 256, 120
        M = docs.shape[1]

        log_prior = np.log(docs.mean(axis=0))
        logp_rows = np.log(docs[rows])
        log_local = (logsumexp(2 * alpha * logp_rows, axis=0)
                     - np.log(rows.size)) / (2 * alpha)
        log_local = log_local - logsumexp(log_local)

        rng = np.random.default_rng(100)
        logsubs = np.log(subs[:2])
        variances = {}
        for name, lphi in (("global", log_prior), ("local", log_local)):
            p = np.exp(lphi)
            p = p / p.sum()
            out = np.empty((trials, rows.size, 2))
            for t in range(trials):
                ids = rng.choice(M, size=J, p=p)
                W = np.exp(alpha * (logp_rows[:, ids] - lphi[ids][None, :]))
                g = logp_rows[:, ids][:, None, :] - logsubs[:, ids][None, :, :]
                out[t] = (W[:, None, :] * g).mean(axis=2)
            variances[name] = out.var(axis=0, ddof=1)
        frac = float((variances["local"] <= variances["global"]).mean())
        elapsed = time.time() - t0
        ok = frac >= 0.6
        assert report("hierarchy-localized-phi", ok,
                      f"localized wins {frac*100:.0f}% of pairs, {elapsed:.1f}s")


class TestDeterminism:
    def test_byte_identical_across_thread_counts(self, tmp_path):
        """Repeating each pipeline with the same seed and different thread
        counts yields byte-identical artifacts."""
        t0 = time.time()

        def run(args):
            res = subprocess.run([sys.executable, "-m", "gckit", *map(str, args)],
                                 capture_output=True, text=True)
            assert res.returncode == 0, res.stderr

        synth_dir = tmp_path / "synth"
        run(["synth", "--k-true", 3, "--n-docs", 50, "--m", 60, "--j", 128,
             "--noise", 0.05, "--seed", 3, "--out", synth_dir])

        ok = True
        for cmd, outputs in (
            (["cluster", "--k", 3, "--seed", 5], ["assignment.jsonl", "run.json"]),
            (["hcluster", "--k", 2, "--leaf-threshold", 5, "--seed", 5],
             ["codes.jsonl", "tree.json"]),
        ):
            out = tmp_path / cmd[0]
            snapshots = []
            for threads in (1, 4):
                run(cmd + ["--input", synth_dir / "matrix.lpm",
                           "--threads", threads, "--out", out])
                snapshots.append(tuple((out / f).read_bytes() for f in outputs))
            ok &= snapshots[0] == snapshots[1]
        elapsed = time.time() - t0
        assert report("determinism", ok, f"{elapsed:.1f}s")
