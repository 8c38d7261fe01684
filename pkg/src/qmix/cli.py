"""Command-line front end. Numeric output is CSV on stdout or ``--out``.

Failures print a single line ``error: <category>: <message>`` to stderr and
exit with status 2.
"""

import json
import sys
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from . import datastore, qml, report
from .circuits import AnsatzSpec, ancilla_distribution, build_ansatz, build_parallel_swap_test, estimate_cel_swap
from .entanglement import ce_pure, cel_mixed
from .errors import DatasetError, FormatError, QmixError
from .genesis import GenConfig, generate_entangled_dataset, generate_separable_dataset, table1_rows
from .qcore import PureState, as_density

KINDS = click.Choice(["HWE", "SEA", "SD"], case_sensitive=False)


@contextmanager
def _sink(out):
    if out is None or out == "-":
        yield sys.stdout
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _emit(out, header, rows):
    with _sink(out) as fh:
        datastore.write_csv(fh, header, rows)


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}")


def _load_many(dirs):
    states = []
    for d in dirs:
        states += datastore.load_dataset(d)
    if not states:
        raise DatasetError("no states loaded")
    return states


@click.group()
def cli():
    """Certified entangled/separable mixed-state datasets and classifier benchmarks."""


@cli.command("gen-entangled")
@click.option("--n", "n", type=int, required=True, help="target qubits")
@click.option("--count", type=int, default=500, show_default=True, help="states per table row")
@click.option("--seed", type=int, required=True)
@click.option("--xi", type=float, default=0.25, show_default=True)
@click.option("--eps", type=float, default=0.5, show_default=True)
@click.option("--delta", type=float, default=0.01, show_default=True)
@click.option("--ancilla", type=int, default=2, show_default=True)
@click.option("--iters", type=int, default=500, show_default=True, help="generator training steps")
@click.option("--table", type=click.Path(exists=True, dir_okay=False), help="CSV rows ansatz,width,depth,count")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True, help="dataset directory")
def gen_entangled(n, count, seed, xi, eps, delta, ancilla, iters, table, workers, out):
    """Train one generator per table row and emit certified entangled states."""
    cfg = GenConfig(n, ancilla, xi, delta, eps, seed, iters)
    rows = datastore.read_table_csv(table) if table else table1_rows(n, count, ancilla)
    states = generate_entangled_dataset(cfg, rows, workers=workers)
    meta = {"label": "entangled", "xi": xi, "epsilon": eps, "delta": delta, "seed": seed, "n_target": n}
    doc = datastore.save_dataset(out, states, rows[0].dataset, rows, meta)
    _emit(None, ("dataset", "count", "entangled", "separable"),
          [(out, doc["count"], doc["label_counts"]["entangled"], doc["label_counts"]["separable"])])


@cli.command("gen-separable")
@click.option("--n", "n", type=int, required=True)
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--ancilla", type=int, default=2, show_default=True)
@click.option("--gates", type=int, default=None, help="controlled rotations per state [default: 2n]")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def gen_separable(n, count, seed, ancilla, gates, out):
    """Emit separable states from ancilla-controlled single-target rotations."""
    states = generate_separable_dataset(n, count, seed, ancilla, gates)
    meta = {"label": "separable", "seed": seed, "n_target": n, "gates_per_state": gates or 2 * n}
    doc = datastore.save_dataset(out, states, f"{n}QUBIT-SEPARABLE", (), meta)
    _emit(None, ("dataset", "count", "entangled", "separable"),
          [(out, doc["count"], doc["label_counts"]["entangled"], doc["label_counts"]["separable"])])


@cli.command("cel")
@click.option("--input", "inputs", type=click.Path(exists=True), multiple=True, required=True,
              help="state file (repeatable)")
@click.option("--out", default=None)
def cel_cmd(inputs, out):
    """CEL, purity and subset-purity sum of stored states."""
    rows = []
    for path in inputs:
        rep = cel_mixed(datastore.load_state(path))
        rows.append((path, rep.n_qubits, rep.purity, rep.subset_purity_sum, rep.value, int(rep.value > 0)))
    _emit(out, ("file", "n", "purity", "subset_purity_sum", "cel", "certified_entangled"), rows)


@cli.command("families")
@click.argument("family", type=click.Choice(["ghz", "w"], case_sensitive=False))
@click.option("--n", "n", type=int, required=True)
@click.option("--p", "ps", type=float, multiple=True, required=True, help="signal weight (repeatable)")
@click.option("--out", default=None)
def families(family, n, ps, out):
    """Closed-form CEL of a white-noise family against its separability threshold."""
    f, thr = report.FAMILIES[family.lower()]
    t = thr(n)
    rows = [(family.lower(), n, p, f(n, p), t, int(p <= t), int(f(n, p) > 0)) for p in ps]
    _emit(out, ("family", "n", "p", "cel", "threshold", "below_threshold", "certified_entangled"), rows)


@cli.command("swap-test")
@click.option("--input", "path", type=click.Path(exists=True), required=True)
@click.option("--out", default=None)
def swap_test(path, out):
    """Swap-test estimate of CE (pure input) or CEL (mixed input) next to the exact value."""
    state = datastore.load_state(path)
    if isinstance(state, PureState):
        n = state.n_qubits
        doubled = PureState(np.kron(np.kron(np.eye(1, 2**n, 0).ravel(), state.amplitudes), state.amplitudes),
                            validate=False)
        dist = ancilla_distribution(build_parallel_swap_test(n), doubled, list(range(n)))
        p0 = dist["0" * n]
        rows = [(path, "ce", n, p0, 1 - p0, ce_pure(state))]
    else:
        rep = cel_mixed(state)
        est = estimate_cel_swap(state)
        rows = [(path, "cel", state.n_qubits, float("nan"), est, rep.value)]
    _emit(out, ("file", "quantity", "n", "p_all_zero", "swap_estimate", "exact"), rows)


@cli.command("purity-survey")
@click.option("--seed", type=int, required=True)
@click.option("--samples", type=int, default=100, show_default=True)
@click.option("--widths", default="2,3,4,5", show_default=True)
@click.option("--depths", default="1,2,3,4", show_default=True)
@click.option("--out", default=None)
def purity_survey_cmd(seed, samples, widths, depths, out):
    """Purity of random ansatz outputs after tracing out one qubit."""
    header, rows = report.fig4_purity(widths=_int_list(widths), depths=_int_list(depths), samples=samples,
                                      seed=seed)
    _emit(out, header, rows)


@cli.command("train")
@click.option("--data", "data", type=click.Path(exists=True, file_okay=False), multiple=True, required=True)
@click.option("--ansatz", type=KINDS, required=True)
@click.option("--width", type=int, required=True)
@click.option("--depth", type=int, required=True)
@click.option("--iters", type=int, default=100, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.option("--lr", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--params-out", type=click.Path(dir_okay=False), help="write trained parameters as JSON")
@click.option("--out", default=None, help="trajectory CSV")
def train(data, ansatz, width, depth, iters, batch, lr, seed, params_out, out):
    """Train the classifier; writes the per-iteration trajectory and test metrics."""
    states = _load_many(data)
    spec = AnsatzSpec(ansatz.upper(), width, depth)
    rec = qml.train_classifier(states, spec, qml.TrainConfig(batch, iters, lr, seed))
    n = rec.n_target
    rows = [(n, spec.kind.value, width, depth, seed, i, loss, acc)
            for i, (loss, acc) in enumerate(zip(rec.loss_trajectory, rec.batch_accuracy_trajectory))]
    _emit(out, qml.TRAJECTORY_HEADER, rows)
    m = rec.metrics
    click.echo(f"# test accuracy={m.accuracy:.4f} precision={m.precision:.4f} recall={m.recall:.4f} f1={m.f1:.4f}",
               err=True)
    if params_out:
        Path(params_out).write_text(json.dumps({
            "ansatz": spec.kind.value, "width": width, "depth": depth, "n_target": n, "seed": seed,
            "params": [float(x) for x in rec.params],
        }, indent=1) + "\n", encoding="utf-8")


@cli.command("eval")
@click.option("--data", "data", type=click.Path(exists=True, file_okay=False), multiple=True, required=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", default=None)
def eval_cmd(data, params_path, out):
    """Metrics of stored parameters on a dataset."""
    try:
        doc = json.loads(Path(params_path).read_text(encoding="utf-8"))
        spec = AnsatzSpec(doc["ansatz"], doc["width"], doc["depth"])
        params, n = doc["params"], doc["n_target"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"bad parameter file: {exc}") from exc
    circ = build_ansatz(spec)
    m = qml.evaluate(circ, params, _load_many(data), qml.ObservableSpec(circ.width, n))
    _emit(out, ("ansatz", "width", "depth", "accuracy", "precision", "recall", "f1"),
          [(spec.kind.value, spec.width, spec.depth, m.accuracy, m.precision, m.recall, m.f1)])


@cli.command("report")
@click.argument("figure", type=click.Choice(["fig2", "fig4", "fig5", "fig6", "fig7"]))
@click.option("--seed", type=int, default=None, help="required for fig4-fig7")
@click.option("--data", "data", type=click.Path(exists=True, file_okay=False), multiple=True,
              help="dataset directories (fig6, fig7)")
@click.option("--count", type=int, default=200, show_default=True, help="states per epsilon (fig5)")
@click.option("--samples", type=int, default=100, show_default=True, help="samples per cell (fig4)")
@click.option("--iters", type=int, default=100, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.option("--kinds", default="HWE,SEA,SD", show_default=True)
@click.option("--width-offsets", default="0,1,2,3", show_default=True)
@click.option("--depths", default="3,4,5,6", show_default=True)
@click.option("--seeds", "n_seeds", type=int, default=1, show_default=True, help="training seeds per cell")
@click.option("--summary", is_flag=True, help="fig5: per-epsilon statistics instead of samples")
@click.option("--out", default=None)
def report_cmd(figure, seed, data, count, samples, iters, batch, kinds, width_offsets, depths, n_seeds, summary,
               out):
    """Regenerate the data behind one figure."""
    if figure == "fig2":
        _emit(out, *report.fig2_curves())
        return
    if seed is None:
        raise click.UsageError(f"{figure} requires --seed")
    if figure == "fig4":
        _emit(out, *report.fig4_purity(samples=samples, seed=seed))
    elif figure == "fig5":
        header, rows, sheader, srows = report.fig5_distribution(count=count, seed=seed)
        _emit(out, *((sheader, srows) if summary else (header, rows)))
    else:
        states = _load_many(data)
        by_n = {}
        for s in states:
            by_n.setdefault(as_density(s.state).n_qubits, []).append(s)
        kind_list = tuple(k.strip().upper() for k in kinds.split(",") if k.strip())
        traj, final = qml.benchmark_suite(by_n, kind_list, _int_list(width_offsets), _int_list(depths),
                                          tuple(seed + i for i in range(n_seeds)), qml.TrainConfig(batch, iters))
        if figure == "fig6":
            _emit(out, *report.fig6_convergence(traj))
        else:
            _emit(out, *report.fig7_performance(final))


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="qmix", standalone_mode=False)
    except QmixError as exc:
        click.echo(f"error: {exc.category}: {exc}", err=True)
        sys.exit(2)
    except click.exceptions.Abort:
        click.echo("error: aborted: interrupted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        click.echo(f"error: usage: {exc.format_message()}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: io: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
