"""Command-line front end driving every experiment end to end.

Each subcommand writes a manifest (seed, full config, input hashes) into
the output directory before any heavy work, then emits its artifacts as
checkpoints, feature containers or CSV tables. Failures map to distinct
exit codes: 2 bad configuration, 3 bad data, 4 numeric breakdown.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import ansatz, bp, data_io, gan, metrics, shots
from .autoencoder import init_autoencoder, train_autoencoder
from .errors import ConfigError, DataError, NumericError
from .rng import hash_seed, spawn_rng

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
ANSATZ_KINDS = ("circuit1", "circuit2", "circuit3",
                "efficient_su2_pairwise", "efficient_su2_circular")


def parse_int_list(text: str) -> list[int]:
    """Accept '2,3,5', '2:8' or '2..8' (both range forms inclusive)."""
    text = text.strip()
    for sep in (":", ".."):
        if sep in text:
            lo, hi = text.split(sep, 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _sibling_labels(images_path: str) -> str:
    """train-images-idx3-ubyte -> train-labels-idx1-ubyte, gzip or not."""
    return images_path.replace("images", "labels").replace("idx3", "idx1")


def _apply_config_file(ctx: click.Context, path: str):
    """key=value lines override whatever the flags said."""
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            overrides[key.replace("-", "_")] = value
    by_name = {p.name: p for p in ctx.command.params}
    for key, raw in overrides.items():
        if key not in by_name:
            raise ConfigError(f"{path}: unknown option {key!r} for "
                              f"'{ctx.command.name}'")
        param = by_name[key]
        ctx.params[key] = param.type.convert(raw, param, ctx)


class GuardedCommand(click.Command):
    """Applies the config file before the callback binds its arguments and
    maps domain failures to stable exit codes; real bugs still traceback."""

    def invoke(self, ctx):
        try:
            config_file = ctx.params.get("config_file")
            if config_file:
                _apply_config_file(ctx, config_file)
            return super().invoke(ctx)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except DataError as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except (NumericError, FloatingPointError) as exc:
            click.echo(f"numeric error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)


def common_options(fn):
    fn = click.option("--out", type=click.Path(file_okay=False),
                      default=None, help="Output directory (default: "
                      "$QLATGAN_OUT or the working directory).")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--config", "config_file",
                      type=click.Path(exists=True, dir_okay=False),
                      default=None,
                      help="key=value file; entries override flags.")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Worker threads for the compiled backend.")(fn)
    return fn


def _prepare(ctx, command, out, threads, inputs=None):
    """Pin threads and write the manifest before any heavy work starts."""
    out = out or os.environ.get("QLATGAN_OUT") or "."
    os.makedirs(out, exist_ok=True)
    if threads:
        try:
            import numba
            numba.set_num_threads(threads)
        except ImportError:
            pass
    config = {k: v for k, v in ctx.params.items()
              if k not in ("out", "config_file", "threads") and v is not None}
    config = {k: (list(v) if isinstance(v, tuple) else v)
              for k, v in config.items()}
    data_io.write_manifest(os.path.join(out, f"{command}_manifest.json"),
                           ctx.params.get("seed", 0), config, inputs or {})
    return out


@click.group()
def main():
    """Latent-space quantum GAN laboratory."""


# ------------------------------------------------------------ train-ae

@main.command("train-ae", cls=GuardedCommand)
@click.option("--data", "data_prefix", required=True,
              help="IDX image file; labels are looked up next to it.")
@click.option("--labels", default=None, help="IDX label file (default: "
              "sibling of --data with 'images' -> 'labels').")
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--latent-dim", type=int, default=20, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--limit", type=int, default=None,
              help="Train on only the first N images.")
@common_options
@click.pass_context
def train_ae(ctx, data_prefix, labels, epochs, lr, latent_dim, batch_size,
             limit, out, seed, config_file, threads):
    """Fit the dense autoencoder and save its checkpoint plus a loss CSV."""
    labels = labels or _sibling_labels(data_prefix)
    out = _prepare(ctx, "train_ae", out, threads,
                   {"images": data_prefix, "labels": labels})
    ds = data_io.load_idx(data_prefix, labels)
    images = ds.images[:limit] if limit else ds.images
    ae = init_autoencoder(images.shape[1], latent_dim, seed=seed)
    history = train_autoencoder(ae, images, epochs=epochs,
                                batch_size=batch_size, lr=lr,
                                seed_or_rng=spawn_rng(seed, "ae_train"))
    ckpt = os.path.join(out, "ae.ckpt")
    data_io.save_checkpoint(ckpt, "ae", ae,
                            {"epochs": epochs, "lr": lr,
                             "latent_dim": latent_dim, "seed": seed})
    data_io.write_csv(os.path.join(out, "ae_loss.csv"),
                      [{"epoch": i + 1, "mse": v}
                       for i, v in enumerate(history)])
    click.echo(f"wrote {ckpt} (final mse {history[-1]:.6f})")


# ------------------------------------------------------------ extract-features

@main.command("extract-features", cls=GuardedCommand)
@click.option("--ae", "ae_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_prefix", required=True)
@click.option("--labels", default=None)
@click.option("--limit", type=int, default=None)
@common_options
@click.pass_context
def extract_features(ctx, ae_path, data_prefix, labels, limit, out, seed,
                     config_file, threads):
    """Encode a dataset into the latent feature container."""
    labels = labels or _sibling_labels(data_prefix)
    out = _prepare(ctx, "extract_features", out, threads,
                   {"ae": ae_path, "images": data_prefix, "labels": labels})
    ae, _ = data_io.load_checkpoint(ae_path, "ae")
    ds = data_io.load_idx(data_prefix, labels)
    images = ds.images[:limit] if limit else ds.images
    feats = ae.encode(images)
    fs = data_io.FeatureSet(np.clip(feats, -1.0, 1.0), provenance="real",
                            shots=0, ae_hash=data_io.file_sha256(ae_path))
    path = os.path.join(out, "features.bin")
    data_io.save_features(path, fs)
    click.echo(f"wrote {path} ({len(fs)} x {fs.features.shape[1]})")


# ------------------------------------------------------------ train-gan

@main.command("train-gan", cls=GuardedCommand)
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--generator-kind", type=click.Choice(["quantum", "classical"]),
              default="quantum", show_default=True)
@click.option("--ansatz", "ansatz_kind", type=click.Choice(ANSATZ_KINDS),
              default="circuit1", show_default=True)
@click.option("--n", "n_qubits", type=int, default=None,
              help="Qubit count (default: feature_dim / 2).")
@click.option("--depth", type=int, default=2, show_default=True)
@click.option("--d-z", type=int, default=None,
              help="Latent dimension (default: qubit count).")
@click.option("--delta", type=float, default=0.01, show_default=True,
              help="Affine init bound for the quantum generator.")
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--n-critic", type=int, default=5, show_default=True)
@click.option("--lambda-gp", type=float, default=10.0, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--limit", type=int, default=None)
@common_options
@click.pass_context
def train_gan_cmd(ctx, features_path, generator_kind, ansatz_kind, n_qubits,
                  depth, d_z, delta, epochs, batch_size, n_critic, lambda_gp,
                  lr, limit, out, seed, config_file, threads):
    """Adversarially train a generator on a stored feature set."""
    out = _prepare(ctx, "train_gan", out, threads,
                   {"features": features_path})
    fs = data_io.load_features(features_path)
    real = fs.features[:limit] if limit else fs.features
    feature_dim = real.shape[1]

    cfg = {"generator_kind": generator_kind, "ansatz": ansatz_kind,
           "depth": depth, "epochs": epochs, "seed": seed}
    if generator_kind == "quantum":
        if feature_dim % 2:
            raise ConfigError("quantum features come in (x, z) pairs; "
                              f"width {feature_dim} is odd")
        n = n_qubits or feature_dim // 2
        if 2 * n != feature_dim:
            raise ConfigError(f"{n} qubits produce {2 * n} features, "
                              f"data has {feature_dim}")
        model = ansatz.init_style_generator(ansatz_kind, n, depth,
                                            d_z or n, delta=delta,
                                            seed=seed, rescale=True)
        generator = gan.QuantumGeneratorAdapter(model)
        gen_name = "generator.ckpt"
    else:
        generator = gan.init_classical_generator(d_z or feature_dim,
                                                 feature_dim,
                                                 spawn_rng(seed, "cls_gen"))
        model = generator.net
        gen_name = "classical_generator.ckpt"

    critic = gan.init_critic(feature_dim, spawn_rng(seed, "critic"))
    config = gan.GanConfig(lambda_gp=lambda_gp, n_critic=n_critic,
                           batch_size=batch_size, lr=lr)
    history = gan.train_gan(generator, critic, real, epochs=epochs,
                            config=config, seed=seed)
    data_io.save_checkpoint(os.path.join(out, gen_name), "generator",
                            model, cfg)
    data_io.save_checkpoint(os.path.join(out, "discriminator.ckpt"),
                            "discriminator", critic, cfg)
    data_io.write_csv(os.path.join(out, "gan_history.csv"), history)
    click.echo(f"wrote {os.path.join(out, gen_name)} "
               f"(final critic loss {history[-1]['critic_loss']:.4f})")


# ------------------------------------------------------------ generate

@main.command("generate", cls=GuardedCommand)
@click.option("--generator", "gen_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ae", "ae_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Decode features to images when given.")
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--shots", type=int, default=0, show_default=True,
              help="Measurement shots per expectation (0 = analytic).")
@common_options
@click.pass_context
def generate(ctx, gen_path, ae_path, count, shots, out, seed, config_file,
             threads):
    """Sample the generator, optionally decoding the features to images."""
    inputs = {"generator": gen_path}
    if ae_path:
        inputs["ae"] = ae_path
    out = _prepare(ctx, "generate", out, threads, inputs)
    sg, _ = data_io.load_checkpoint(gen_path, "generator")
    z = spawn_rng(seed, "generate", "z").standard_normal((count, sg.d_z))
    feats = ansatz.generate_features_batch(
        sg, z, shots=shots or None,
        seed=hash_seed(seed, "generate", "shots", shots))
    fs = data_io.FeatureSet(feats, provenance="generated", shots=shots,
                            generator_hash=data_io.file_sha256(gen_path),
                            ae_hash=data_io.file_sha256(ae_path) if ae_path else "")
    fpath = os.path.join(out, "generated_features.bin")
    data_io.save_features(fpath, fs)
    click.echo(f"wrote {fpath}")
    if ae_path:
        ae, _ = data_io.load_checkpoint(ae_path, "ae")
        images = ae.decode(feats)
        side = int(round(np.sqrt(images.shape[1])))
        if side * side != images.shape[1]:
            raise DataError(f"decoded width {images.shape[1]} is not square")
        u8 = np.round(np.clip(images, 0.0, 1.0) * 255).astype(np.uint8)
        ipath = os.path.join(out, "generated-images-idx3-ubyte")
        data_io.write_idx_images(ipath, u8.reshape(-1, side, side))
        click.echo(f"wrote {ipath}")


# ------------------------------------------------------------ evaluate

@main.command("evaluate", cls=GuardedCommand)
@click.option("--real", "real_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--fake", "fake_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--clusters", type=int, default=100, show_default=True)
@common_options
@click.pass_context
def evaluate(ctx, real_path, fake_path, clusters, out, seed, config_file,
             threads):
    """Distribution metrics between two stored feature sets."""
    out = _prepare(ctx, "evaluate", out, threads,
                   {"real": real_path, "fake": fake_path})
    real = data_io.load_features(real_path).features
    fake = data_io.load_features(fake_path).features
    if real.shape[1] != fake.shape[1]:
        raise DataError("feature widths differ between the two sets")
    jsd = metrics.jsd_clustered(real, fake, n_clusters=clusters,
                                seed_or_rng=spawn_rng(seed, "eval_kmeans"))
    fd = metrics.frechet_distance(metrics.gaussian_summary(real),
                                  metrics.gaussian_summary(fake))
    rows = [{"metric": "jsd_clustered", "value": jsd},
            {"metric": "frechet", "value": fd}]
    path = os.path.join(out, "evaluation.csv")
    data_io.write_csv(path, rows)
    for r in rows:
        click.echo(f"{r['metric']}: {r['value']:.6f}")


# ------------------------------------------------------------ bp-scan

@main.command("bp-scan", cls=GuardedCommand)
@click.option("--mode", type=click.Choice(["loss", "gan-grad"]),
              default="loss", show_default=True)
@click.option("--ansatz", "ansatz_kind", type=click.Choice(ANSATZ_KINDS),
              default="efficient_su2_pairwise", show_default=True)
@click.option("--ns", default="2:6", show_default=True,
              help="Qubit counts: '2,4,6', '2:8' or '2..8'.")
@click.option("--depth-rule", default="poly", show_default=True,
              help="log, poly or const:k.")
@click.option("--sigma", "sigmas", default="0.1", show_default=True,
              help="Loss mode: comma-separated init widths.")
@click.option("--sigma-scaling", type=click.Choice(["fixed", "inverse_n"]),
              default="fixed", show_default=True)
@click.option("--delta", type=float, default=0.01, show_default=True,
              help="gan-grad mode: affine init bound.")
@click.option("--observable", default="local_z", show_default=True,
              type=click.Choice(["local_z", "local_x", "global_z", "global_x"]))
@click.option("--draws", type=int, default=2000, show_default=True)
@common_options
@click.pass_context
def bp_scan(ctx, mode, ansatz_kind, ns, depth_rule, sigmas, sigma_scaling,
            delta, observable, draws, out, seed, config_file, threads):
    """Monte Carlo variance scans over qubit count (flat-loss or GAN-gradient)."""
    out = _prepare(ctx, "bp_scan", out, threads)
    n_list = parse_int_list(ns)
    if mode == "loss":
        rows = bp.loss_variance_scan(ansatz_kind, n_list,
                                     parse_float_list(sigmas), observable,
                                     depth_rule, draws, seed,
                                     scaling=sigma_scaling)
    else:
        rows = bp.gradient_variance_scan(ansatz_kind, n_list, delta,
                                         depth_rule, draws, seed)
    path = os.path.join(out, "bp_scan.csv")
    data_io.write_csv(path, rows)
    click.echo(f"wrote {path} ({len(rows)} rows)")


# ------------------------------------------------------------ bound-table

@main.command("bound-table", cls=GuardedCommand)
@click.option("--observable", default="local_z", show_default=True,
              type=click.Choice(["local_z", "local_x"]))
@click.option("--ns", default="2:8", show_default=True)
@click.option("--sigma", "sigmas", default="0.05,0.1,0.3", show_default=True)
@click.option("--prefactor", type=float, default=1.0, show_default=True,
              help="Critic Lipschitz-squared constant c.")
@common_options
@click.pass_context
def bound_table(ctx, observable, ns, sigmas, prefactor, out, seed,
                config_file, threads):
    """Analytic variance lower bounds on an (n, sigma) grid."""
    out = _prepare(ctx, "bound_table", out, threads)
    rows = []
    for n in parse_int_list(ns):
        for sigma in parse_float_list(sigmas):
            row = {"n": n, "sigma": sigma,
                   "bound": bp.bound_for(observable, n, sigma, prefactor)}
            if observable == "local_z":
                row["branch"] = bp.local_z_bound_branch(n, sigma)
            else:
                row["branch"] = "sin2" if sigma < 1.0 else "fallback"
            rows.append(row)
    path = os.path.join(out, "bound_table.csv")
    data_io.write_csv(path, rows)
    click.echo(f"wrote {path} ({len(rows)} rows)")


# ------------------------------------------------------------ shot-scan

@main.command("shot-scan", cls=GuardedCommand)
@click.option("--generator", "gen_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Training feature set used as the reference.")
@click.option("--ae", "ae_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Also run the decoded-image scan when given.")
@click.option("--k-min", type=int, default=4, show_default=True)
@click.option("--k-max", type=int, default=13, show_default=True)
@click.option("--samples", type=int, default=10000, show_default=True)
@click.option("--bins", type=int, default=500, show_default=True)
@common_options
@click.pass_context
def shot_scan(ctx, gen_path, features_path, ae_path, k_min, k_max, samples,
              bins, out, seed, config_file, threads):
    """Finite-shot degradation scans against the analytic generation."""
    inputs = {"generator": gen_path, "features": features_path}
    if ae_path:
        inputs["ae"] = ae_path
    out = _prepare(ctx, "shot_scan", out, threads, inputs)
    if k_max < k_min:
        raise ConfigError("k-max must be >= k-min")
    sg, _ = data_io.load_checkpoint(gen_path, "generator")
    train = data_io.load_features(features_path).features
    cfg = shots.ShotScanConfig(
        shot_grid=tuple(2 ** k for k in range(k_min, k_max + 1)),
        n_samples=samples, n_bins=bins, seed=seed)
    written = []
    for name, rows in (
            ("shot_feature_l2.csv", shots.feature_l2_scan(sg, train, cfg)),
            ("shot_histogram_kl.csv", shots.histogram_kl_scan(sg, train, cfg))):
        path = os.path.join(out, name)
        data_io.write_csv(path, rows)
        written.append(path)
    if ae_path:
        ae, _ = data_io.load_checkpoint(ae_path, "ae")
        path = os.path.join(out, "shot_images.csv")
        data_io.write_csv(path, shots.image_scan(sg, ae, train, cfg))
        written.append(path)
    for path in written:
        click.echo(f"wrote {path}")


# ------------------------------------------------------------ synth-data

@main.command("synth-data", cls=GuardedCommand)
@click.option("--n-train", type=int, default=60000, show_default=True)
@click.option("--n-test", type=int, default=10000, show_default=True)
@common_options
@click.pass_context
def synth_data(ctx, n_train, n_test, out, seed, config_file, threads):
    """Write the deterministic stroke-glyph digit corpus in IDX layout."""
    out = _prepare(ctx, "synth_data", out, threads)
    paths = data_io.write_synthetic_digit_corpus(out, n_train=n_train,
                                                 n_test=n_test, seed=seed)
    for role, path in paths.items():
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
