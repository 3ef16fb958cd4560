"""Acceptance suite: one test per shipped guarantee.

Each test pins its own tolerances and seeds, so a bare ``pytest -v
tests/test_acceptance.py`` prints one pass/fail line per guarantee. The two
desk-scale end-to-end checks (mixture GAN, shot trends) share a
session-scoped trained model; the IDX pipeline check shares a synthetic
digit corpus. Slow tests report their wall-clock budget explicitly.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy import integrate

from qlatgan.ansatz import (
    KINDS,
    build_circuit,
    generate_features_batch,
    init_style_generator,
)
from qlatgan.autoencoder import init_autoencoder, reconstruction_mse, train_autoencoder
from qlatgan.bp import (
    InitSpec,
    expected_loss_analytic,
    fit_exponential,
    fit_powerlaw,
    gaussian_cos2_moment,
    gaussian_cos_moment,
    gaussian_sin2_moment,
    gradient_variance_scan,
    mc_loss_variance,
    scan_observable,
    variance_lower_bound_local_x,
    variance_lower_bound_local_z,
)
from qlatgan.cli import main as cli_main
from qlatgan.data_io import load_idx, read_csv, write_synthetic_digit_corpus
from qlatgan.gan import (
    GanConfig,
    QuantumGeneratorAdapter,
    critic_gradients,
    critic_loss,
    init_classical_generator,
    init_critic,
    train_gan,
)
from qlatgan.metrics import (
    fit_kmeans,
    frechet_distance,
    gaussian_summary,
    jsd_clustered,
)
from qlatgan.neural import Mlp, gp_gradients, lecun_init, mlp_input_gradient
from qlatgan.pauli import (
    CliffordGate,
    PauliString,
    clifford_conjugate,
    commutator_pauli,
    commutes,
    pauli_product,
    weight,
)
from qlatgan.rng import hash_seed, spawn_rng
from qlatgan.shots import ShotScanConfig, feature_l2_scan, histogram_kl_scan
from qlatgan.statevector import (
    adjoint_gradient,
    finite_difference_gradient,
    parameter_shift_gradient,
)

# ---------------------------------------------------------------------------
# dense-matrix oracles for the Pauli layer

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
MATS = (I2, SX, SY, SZ)


def dense(p: PauliString) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for q in range(p.n):
        out = np.kron(MATS[p.axis(q)], out)
    return p.phase * out


def dense_gate(gate: CliffordGate, n: int) -> np.ndarray:
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    for src in range(dim):
        if gate.kind == "h":
            (q,) = gate.qubits
            b = (src >> q) & 1
            for b2 in range(2):
                dst = (src & ~(1 << q)) | (b2 << q)
                out[dst, src] += h[b2, b]
        elif gate.kind == "cnot":
            c, t = gate.qubits
            out[src ^ (((src >> c) & 1) << t), src] += 1.0
        else:
            a, b = gate.qubits
            out[src, src] += -1.0 if ((src >> a) & 1) and ((src >> b) & 1) else 1.0
    return out


def check_pair(p: PauliString, q: PauliString) -> None:
    mp, mq = dense(p), dense(q)
    assert np.array_equal(dense(pauli_product(p, q)), mp @ mq)
    comm = mp @ mq - mq @ mp
    assert commutes(p, q) == bool(np.abs(comm).max() < 1e-12)
    if not commutes(p, q):
        assert np.array_equal(dense(commutator_pauli(p, q)), 0.5j * comm)


def check_conjugation(gate: CliffordGate, p: PauliString) -> None:
    g = dense_gate(gate, p.n)
    got = dense(clifford_conjugate(gate, p))
    np.testing.assert_allclose(got, g @ dense(p) @ g.conj().T, atol=1e-12)


def all_strings(n: int):
    for code in range(4 ** n):
        axes = [(code >> (2 * q)) & 3 for q in range(n)]
        for exp in range(4):
            yield PauliString.from_axes(axes, exp)


def test_pauli_clifford_algebra_matches_dense_oracle():
    t0 = time.time()
    one_qubit = list(all_strings(1))
    for p in one_qubit:
        for q in one_qubit:
            check_pair(p, q)
        check_conjugation(CliffordGate("h", (0,)), p)

    two_qubit = [PauliString.from_axes([a, b], e)
                 for a in range(4) for b in range(4) for e in range(4)]
    gates2 = [CliffordGate("h", (0,)), CliffordGate("h", (1,)),
              CliffordGate("cnot", (0, 1)), CliffordGate("cnot", (1, 0)),
              CliffordGate("cz", (0, 1))]
    for p in two_qubit:
        for q in two_qubit:
            check_pair(p, q)
        for gate in gates2:
            check_conjugation(gate, p)

    rng = spawn_rng(101, "pauli_random")
    for _ in range(1000):
        n = int(rng.integers(3, 5))
        p = PauliString.from_axes(rng.integers(0, 4, size=n), int(rng.integers(0, 4)))
        q = PauliString.from_axes(rng.integers(0, 4, size=n), int(rng.integers(0, 4)))
        check_pair(p, q)
        assert weight(p) == sum(1 for a in p.axes() if a != 0)
        kind = ("h", "cnot", "cz")[int(rng.integers(0, 3))]
        if kind == "h":
            gate = CliffordGate("h", (int(rng.integers(0, n)),))
        else:
            a, b = rng.choice(n, size=2, replace=False)
            gate = CliffordGate(kind, (int(a), int(b)))
        check_conjugation(gate, p)
    assert time.time() - t0 < 10.0


def test_gradient_methods_agree_on_random_circuits():
    t0 = time.time()
    rng = spawn_rng(404, "triple")
    worst = 0.0
    for _ in range(50):
        kind = KINDS[int(rng.integers(0, len(KINDS)))]
        n = int(rng.integers(2, 6))
        if kind in ("circuit3", "efficient_su2_pairwise") and n % 2:
            n = min(n + 1, 4)
        depth = int(rng.integers(1, 4))
        circuit = build_circuit(kind, n, depth)
        angles = rng.uniform(-np.pi, np.pi, size=circuit.angle_count)
        axes = rng.integers(0, 4, size=n)
        if not axes.any():
            axes[0] = 3
        obs = PauliString.from_axes(axes)
        ga = adjoint_gradient(circuit, angles, obs)
        gp = parameter_shift_gradient(circuit, angles, obs)
        gf = finite_difference_gradient(circuit, angles, obs, eps=1e-5)
        scale = max(np.abs(ga).max(), np.abs(gp).max(), np.abs(gf).max(), 1e-10)
        rel = max(np.abs(ga - gp).max(), np.abs(ga - gf).max(),
                  np.abs(gp - gf).max()) / scale
        worst = max(worst, rel)
    assert worst < 1e-5
    assert time.time() - t0 < 60.0


def test_gaussian_rotation_moments_match_quadrature():
    for sigma in (0.05, 0.1, 0.5, 1.0, 2.0):
        norm = 1.0 / (sigma * np.sqrt(2.0 * np.pi))

        def moment(f):
            val, err = integrate.quad(
                lambda t: f(t) * norm * np.exp(-0.5 * (t / sigma) ** 2),
                -12.0 * sigma, 12.0 * sigma, limit=800,
                epsabs=1e-13, epsrel=1e-13)
            assert err < 1e-11
            return val

        assert abs(gaussian_cos_moment(sigma) - moment(np.cos)) < 1e-10
        assert abs(gaussian_cos2_moment(sigma) - moment(lambda t: np.cos(t) ** 2)) < 1e-10
        assert abs(gaussian_sin2_moment(sigma) - moment(lambda t: np.sin(t) ** 2)) < 1e-10
        assert gaussian_cos2_moment(sigma) + gaussian_sin2_moment(sigma) == 1.0


def test_expected_loss_formula_matches_monte_carlo():
    t0 = time.time()
    for kind in ("efficient_su2_pairwise", "efficient_su2_circular"):
        for obs_name in ("local_z", "global_z"):
            for n in (2, 4, 6):
                for sigma in (0.1, 0.3):
                    circuit = build_circuit(kind, n, n)
                    obs = scan_observable(obs_name, n)
                    analytic = expected_loss_analytic(circuit, obs, sigma)
                    st = mc_loss_variance(
                        circuit, obs, InitSpec("normal", sigma), 100_000,
                        seed=hash_seed(2024, kind, obs_name, n, sigma))
                    assert abs(analytic - st.mean) <= 3.0 * st.mean_stderr, (
                        kind, obs_name, n, sigma)
    assert time.time() - t0 < 600.0


def test_variance_lower_bounds_dominate_and_wide_init_decays():
    draws = 4000
    for n in range(2, 9):
        circuit = build_circuit("efficient_su2_pairwise", n, n)
        for sigma in (0.05, 0.1, 0.3):
            for obs_name, bound_fn in (("local_z", variance_lower_bound_local_z),
                                       ("local_x", variance_lower_bound_local_x)):
                st = mc_loss_variance(
                    circuit, scan_observable(obs_name, n),
                    InitSpec("normal", sigma), draws,
                    seed=hash_seed(3131, obs_name, n, sigma))
                bound = bound_fn(n, sigma)
                assert bound <= st.variance + 3.0 * st.variance_stderr, (
                    obs_name, n, sigma, bound, st.variance)

    # wide init: ring entanglement spreads every qubit's light cone over the
    # whole register, so the variance collapses to the 2^-n scrambled value
    ns = np.arange(2, 9)
    variances = []
    for n in ns:
        circuit = build_circuit("efficient_su2_circular", int(n), int(n))
        st = mc_loss_variance(circuit, scan_observable("local_z", int(n)),
                              InitSpec("normal", 1.5), draws,
                              seed=hash_seed(3232, "wide", int(n)))
        variances.append(st.variance)
    fit = fit_exponential(ns, np.array(variances))
    assert fit.exponent < 0.0
    assert fit.r2 > 0.95


def test_inverse_n_width_gives_polynomial_decay():
    ns = np.arange(2, 11)
    variances, stderrs, bounds = [], [], []
    for n in ns:
        circuit = build_circuit("efficient_su2_pairwise", int(n), int(n))
        st = mc_loss_variance(circuit, scan_observable("local_z", int(n)),
                              InitSpec("normal", 1.0, scaling="inverse_n"),
                              4000, seed=hash_seed(4242, "invn", int(n)))
        variances.append(st.variance)
        stderrs.append(st.variance_stderr)
        bounds.append(variance_lower_bound_local_z(int(n), 1.0 / n))
    fit = fit_powerlaw(ns, np.array(variances))
    assert -5.0 < fit.exponent < -1.5
    assert fit.r2 > 0.9
    for n, v, se, b in zip(ns, variances, stderrs, bounds):
        assert b <= v + 3.0 * se, (n, b, v)


def test_gradient_variance_regimes():
    t0 = time.time()
    ns = np.arange(2, 9, dtype=float)

    def variances(delta, rule):
        rows = gradient_variance_scan("circuit1", range(2, 9), delta, rule,
                                      2000, seed=909)
        return np.array([r["variance"] for r in rows])

    shallow = fit_powerlaw(ns, variances(np.pi, "log"))
    assert shallow.r2 > 0.9 and shallow.exponent < 0.0

    deep = fit_exponential(ns, variances(np.pi, "poly"))
    assert deep.r2 > 0.9 and deep.exponent < 0.0

    narrow = fit_powerlaw(ns, variances(0.1, "poly"))
    assert narrow.r2 > 0.9 and narrow.exponent < 0.0
    assert time.time() - t0 < 1800.0


def test_wgan_gp_gradients_match_finite_differences():
    rng = spawn_rng(505, "gp")
    net = lecun_init([6, 8, 5, 1], rng)
    x_hat = rng.standard_normal((4, 6))
    real = rng.standard_normal((4, 6))
    fake = rng.standard_normal((4, 6))

    penalty, grads = gp_gradients(net, x_hat)

    def penalty_of(m):
        g = mlp_input_gradient(m, x_hat)
        return float(((np.sqrt((g ** 2).sum(axis=1)) - 1.0) ** 2).mean())

    assert abs(penalty - penalty_of(net)) < 1e-12
    h = 1e-6
    worst = 0.0
    for pi, p in enumerate(net.param_list()):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = penalty_of(net)
            p[idx] = old - h
            dn = penalty_of(net)
            p[idx] = old
            fd = (up - dn) / (2.0 * h)
            worst = max(worst, abs(fd - grads[pi][idx]) / max(abs(fd), 1e-8))
    assert worst < 1e-4

    lam = 7.5
    loss0, cgrads = critic_gradients(net, real, fake, x_hat, lam)
    worst = 0.0
    for pi, p in enumerate(net.param_list()):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = critic_loss(net, real, fake, x_hat, lam)
            p[idx] = old - h
            dn = critic_loss(net, real, fake, x_hat, lam)
            p[idx] = old
            fd = (up - dn) / (2.0 * h)
            worst = max(worst, abs(fd - cgrads[pi][idx]) / max(abs(fd), 1e-8))
    assert worst < 1e-4

    # linear critic closed forms
    w = rng.standard_normal((1, 6))
    linear = Mlp([w.copy()], [np.array([0.3])], head="linear")
    hand = float((fake @ w[0] + 0.3).mean() - (real @ w[0] + 0.3).mean())
    assert abs(critic_loss(linear, real, fake, x_hat, 0.0) - hand) < 1e-12
    pen, lin_grads = gp_gradients(linear, x_hat)
    norm = float(np.sqrt((w ** 2).sum()))
    assert abs(pen - (norm - 1.0) ** 2) < 1e-12
    np.testing.assert_allclose(lin_grads[0], 2.0 * (norm - 1.0) * w / norm,
                               atol=1e-12)
    np.testing.assert_allclose(lin_grads[1], 0.0, atol=1e-15)


# ---------------------------------------------------------------------------
# desk-scale end-to-end checks

MIX_SEED = 23
GAN_EPOCHS = 50


def mixture_features(n_samples: int, seed: int) -> np.ndarray:
    """4-component Gaussian mixture over (X_i, Z_i) feature pairs.

    Component means stay well inside the per-qubit disk X^2+Z^2 <= 1 that any
    single-qubit reduced state can reach, so the target is attainable.
    """
    rng = spawn_rng(seed, "mixture")
    means = rng.uniform(-0.55, 0.55, size=(4, 20))
    comp = rng.integers(0, 4, size=n_samples)
    x = means[comp] + 0.05 * rng.standard_normal((n_samples, 20))
    return np.clip(x, -0.95, 0.95)


@pytest.fixture(scope="session")
def mixture_gan():
    train = mixture_features(2000, MIX_SEED)
    eval_real = mixture_features(2048, MIX_SEED + 1)
    centers = fit_kmeans(eval_real, 4, spawn_rng(MIX_SEED, "kmeans"))

    gen = QuantumGeneratorAdapter(
        init_style_generator("circuit1", 10, 2, 20, delta=0.01,
                             seed=spawn_rng(MIX_SEED, "gen"), rescale=True))
    critic = init_critic(20, spawn_rng(MIX_SEED, "critic"))

    def jsd_now(g, tag):
        z = spawn_rng(MIX_SEED, "eval", tag).standard_normal((2048, g.d_z))
        return jsd_clustered(eval_real, g.sample(z), centers=centers)

    jsd_init = jsd_now(gen, "init")
    trace = []

    def hook(g, epoch):
        v = jsd_now(g, epoch)
        trace.append(v)
        return {"jsd": v}

    t0 = time.time()
    history = train_gan(gen, critic, train, epochs=GAN_EPOCHS,
                        config=GanConfig(batch_size=32, n_critic=2, lr=2e-3),
                        seed=MIX_SEED, eval_hook=hook, eval_every=1)
    return {"train": train, "gen": gen, "jsd_init": jsd_init,
            "trace": trace, "history": history, "seconds": time.time() - t0}


def test_mixture_gan_reduces_cluster_jsd(mixture_gan):
    jsd_init = mixture_gan["jsd_init"]
    best = min(mixture_gan["trace"])
    assert best <= jsd_init / 5.0, (jsd_init, best)
    assert mixture_gan["seconds"] < 3600.0
    assert all(np.isfinite(row["critic_loss"]) for row in mixture_gan["history"])

    # the classical baseline must run through the identical loop
    baseline = init_classical_generator(20, 20, spawn_rng(MIX_SEED, "cls"))
    critic = init_critic(20, spawn_rng(MIX_SEED, "cls_critic"))
    history = train_gan(baseline, critic, mixture_gan["train"], epochs=2,
                        config=GanConfig(batch_size=32, n_critic=2, lr=2e-3),
                        seed=MIX_SEED + 7)
    assert len(history) == 2
    assert all(np.isfinite(row["critic_loss"]) for row in history)


def test_shot_noise_trends_on_trained_model(mixture_gan):
    gen = mixture_gan["gen"].gen
    train = mixture_gan["train"]
    cfg = ShotScanConfig(shot_grid=tuple(2 ** k for k in range(4, 14)),
                         n_samples=10_000, n_bins=500, seed=6060)

    rows = feature_l2_scan(gen, train, cfg)
    sampled = [(r["shots"], r["value"]) for r in rows
               if r["statistic"] == "feature_l2" and r["shots"] > 0]
    shots = np.array([s for s, _ in sampled], dtype=float)
    l2 = np.array([v for _, v in sampled])
    fit = fit_powerlaw(shots, l2)
    assert -0.6 < fit.exponent < -0.4, fit

    kl_rows = histogram_kl_scan(gen, train, cfg)
    kl = {r["shots"]: r["value"] for r in kl_rows if r["statistic"] == "kl_mean"}
    assert abs(kl[8192] - kl[4096]) < 0.05 * kl[4096], (kl[4096], kl[8192])

    ref = gaussian_summary(train)
    z = spawn_rng(6060, "frechet", "z").standard_normal((cfg.n_samples, gen.d_z))
    fre = {}
    for shots_level in (4096, 8192):
        feats = generate_features_batch(gen, z, shots=shots_level,
                                        seed=hash_seed(6060, "frechet", shots_level))
        fre[shots_level] = frechet_distance(gaussian_summary(feats), ref)
    assert abs(fre[8192] - fre[4096]) < 0.05 * fre[4096], fre


@pytest.fixture(scope="session")
def digit_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    write_synthetic_digit_corpus(out, n_train=60_000, n_test=10_000, seed=55)
    return out


def test_idx_roundtrip_autoencoder_and_cli_pipeline(digit_corpus, tmp_path):
    train = load_idx(digit_corpus / "train-images-idx3-ubyte",
                     digit_corpus / "train-labels-idx1-ubyte")
    test = load_idx(digit_corpus / "t10k-images-idx3-ubyte",
                    digit_corpus / "t10k-labels-idx1-ubyte")
    assert train.images.shape == (60_000, 28 * 28)
    assert train.labels.shape == (60_000,)
    assert test.images.shape == (10_000, 28 * 28)

    flat = train.images[:10_000]
    ae = init_autoencoder(flat.shape[1], 20, seed=7)
    mse_init = reconstruction_mse(ae, flat)
    train_autoencoder(ae, flat, epochs=6, batch_size=64, lr=1e-3, seed_or_rng=11)
    mse_trained = reconstruction_mse(ae, flat)
    assert mse_trained <= 0.1 * mse_init, (mse_init, mse_trained)

    runner = CliRunner()
    out = str(tmp_path)
    data = str(digit_corpus / "train-images-idx3-ubyte")

    def invoke(*args):
        result = runner.invoke(cli_main, list(args))
        assert result.exit_code == 0, result.output
        return result

    invoke("train-ae", "--data", data, "--epochs", "3", "--latent-dim", "20",
           "--limit", "2000", "--out", out, "--seed", "3")
    invoke("extract-features", "--ae", f"{out}/ae.ckpt", "--data", data,
           "--limit", "2000", "--out", out, "--seed", "3")
    invoke("train-gan", "--features", f"{out}/features.bin", "--epochs", "5",
           "--n", "10", "--depth", "2", "--d-z", "20", "--batch-size", "32",
           "--n-critic", "2", "--out", out, "--seed", "3")
    invoke("generate", "--generator", f"{out}/generator.ckpt",
           "--ae", f"{out}/ae.ckpt", "--count", "500", "--out", out,
           "--seed", "3")
    invoke("evaluate", "--real", f"{out}/features.bin",
           "--fake", f"{out}/generated_features.bin", "--clusters", "10",
           "--out", out, "--seed", "3")

    rows = read_csv(f"{out}/evaluation.csv")
    assert rows, "evaluation must produce at least one metric row"
    for row in rows:
        for key, value in row.items():
            if isinstance(value, float):
                assert np.isfinite(value), (key, value)
