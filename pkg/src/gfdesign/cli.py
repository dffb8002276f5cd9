"""Command-line interface.

Subcommands: design, simulate, spectrum, shift-design, and exp:<name> for
the batch experiments. Exit codes: 0 success, 2 configuration/usage error,
3 numerical failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from ._version import __version__
from .design import (
    LinearTarget,
    design_anc,
    design_mse_node_invariant,
    design_mse_node_variant,
    design_perfect_node_invariant,
    design_perfect_node_variant,
    design_wce_node_invariant,
    design_wce_node_variant,
)
from .exceptions import GFDesignError, ParameterError
from .experiments import (
    EXPERIMENTS,
    config_from_mapping,
    default_config,
    run_experiment,
    write_csv,
    write_manifest,
)
from .filters import filter_from_json
from .graphs import GeneratorConfig, read_edgelist, write_edgelist
from .netsim import SIM_MODES, simulate
from .shift_design import RankOneTarget, build_rank_one_shift
from .shifts import SHIFT_KINDS, read_shift, shift_from_graph, write_shift
from .spectral import decompose


def _parse_generator(spec_str) -> GeneratorConfig:
    """Parse 'model:key=value,key=value' generator descriptions."""
    model, _, rest = spec_str.partition(":")
    kwargs = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not _:
                raise ParameterError(f"bad generator parameter {item!r}")
            kwargs[key.strip()] = value.strip()
    fields = GeneratorConfig.__dataclass_fields__
    converted = {}
    for key, value in kwargs.items():
        if key not in fields:
            raise ParameterError(f"unknown generator parameter {key!r}")
        typ = fields[key].type
        if typ == "bool" or isinstance(fields[key].default, bool):
            converted[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(fields[key].default, int) and not isinstance(fields[key].default, bool):
            converted[key] = int(value)
        elif isinstance(fields[key].default, float):
            converted[key] = float(value)
        else:
            converted[key] = value
    if "n" not in converted:
        raise ParameterError("generator description needs n=<count>")
    n = converted.pop("n")
    return GeneratorConfig(model, int(n), **converted)


def _load_shift(shift_arg, kind):
    """--shift accepts 'file:<edgelist>' (graph), 'shiftfile:<path>' (raw
    matrix dump), or a generator description 'model:n=...,seed=...'."""
    if shift_arg.startswith("file:"):
        graph = read_edgelist(shift_arg[5:])
        return shift_from_graph(graph, kind), graph
    if shift_arg.startswith("shiftfile:"):
        return read_shift(shift_arg[10:]), None
    graph = None
    from .graphs import generate

    graph = generate(_parse_generator(shift_arg))
    return shift_from_graph(graph, kind), graph


def _load_vector(arg, n):
    if arg.startswith("random:"):
        rng = np.random.default_rng(int(arg.split(":", 1)[1]))
        return rng.standard_normal(n)
    if arg.startswith("random-positive:"):
        rng = np.random.default_rng(int(arg.split(":", 1)[1]))
        return rng.uniform(0.5, 1.5, size=n)
    return np.loadtxt(arg, ndmin=1)


def _load_rx(arg, n):
    if arg is None or arg == "identity":
        return None, None
    if arg.startswith("rho:"):
        rho = float(arg.split(":", 1)[1])
        factor = np.eye(n) + rho * (np.ones((n, n)) - np.eye(n))
        return None, factor
    return np.loadtxt(arg, ndmin=2), None


class _Cli(click.Group):
    def main(self, *args, **kwargs):
        kwargs.setdefault("standalone_mode", False)
        try:
            return super().main(*args, **kwargs)
        except click.UsageError as exc:
            click.echo(f"error: {exc.format_message()}", err=True)
            sys.exit(2)
        except click.ClickException as exc:
            exc.show()
            sys.exit(exc.exit_code)
        except click.exceptions.Abort:
            sys.exit(1)
        except ParameterError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except GFDesignError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(3)


@click.group(cls=_Cli)
@click.version_option(version=__version__)
def main():
    """Design and simulate graph filters for distributed linear operators."""


@main.command()
@click.option("--shift", "shift_arg", required=True,
              help="file:<edgelist>, shiftfile:<path>, or generator 'model:n=..,seed=..'")
@click.option("--shift-kind", type=click.Choice(SHIFT_KINDS), default="adjacency",
              show_default=True)
@click.option("--target", "target_arg", required=True,
              help="path to a dense matrix, builtin:consensus, or builtin:anc")
@click.option("--mode", type=click.Choice(["node-invariant", "node-variant"]),
              default="node-invariant", show_default=True)
@click.option("--criterion", type=click.Choice(["perfect", "mse", "wce", "frobenius"]),
              default="mse", show_default=True)
@click.option("--order", type=int, default=None,
              help="number of coefficients L; 0 is treated as a single constant tap")
@click.option("--rx", "rx_arg", default=None,
              help="identity, rho:VALUE, or path to a covariance matrix")
@click.option("--sources", default=None, help="comma-separated source nodes (ANC)")
@click.option("--sinks", default=None, help="comma-separated sink nodes (ANC)")
@click.option("--reduction", type=click.Choice(["sources", "rows"]), default="sources",
              show_default=True, help="ANC reduction")
@click.option("--output", type=click.Path(), default=None, help="write report JSON here")
@click.option("--save-graph", type=click.Path(), default=None,
              help="export the generated/loaded graph as an edge list")
def design(shift_arg, shift_kind, target_arg, mode, criterion, order, rx_arg,
           sources, sinks, reduction, output, save_graph):
    """Design filter coefficients for a target operator and print the report."""
    shift, graph = _load_shift(shift_arg, shift_kind)
    if save_graph:
        if graph is None:
            raise ParameterError("--save-graph needs a graph-backed shift")
        write_edgelist(graph, save_graph)
    if order is not None and order == 0:
        order = 1
    spec = decompose(shift)
    n = shift.n
    rx, rx_factor = _load_rx(rx_arg, n)

    if target_arg == "builtin:consensus":
        target = LinearTarget.consensus(n, rx=rx, rx_factor=rx_factor)
    elif target_arg == "builtin:anc":
        if not sources or not sinks:
            raise ParameterError("builtin:anc needs --sources and --sinks")
        src = [int(v) for v in sources.split(",")]
        snk = [int(v) for v in sinks.split(",")]
        target = LinearTarget.anc(n, src, snk, rx=rx, rx_factor=rx_factor)
    else:
        target = LinearTarget(np.loadtxt(target_arg, ndmin=2), rx=rx, rx_factor=rx_factor)
        if sources:
            target.sources = tuple(int(v) for v in sources.split(","))
        if sinks:
            target.sinks = tuple(int(v) for v in sinks.split(","))

    if target.sinks:
        report = design_anc(spec, target, order, mode=mode, reduction=reduction)
    elif mode == "node-invariant":
        fn = {"perfect": design_perfect_node_invariant,
              "mse": design_mse_node_invariant,
              "frobenius": design_mse_node_invariant,
              "wce": design_wce_node_invariant}[criterion]
        report = fn(spec, target, order)
    else:
        fn = {"perfect": design_perfect_node_variant,
              "mse": design_mse_node_variant,
              "frobenius": design_mse_node_variant,
              "wce": design_wce_node_variant}[criterion]
        report = fn(spec, target, order)

    text = report.to_json()
    if output:
        Path(output).write_text(text + "\n")
    click.echo(text)


@main.command()
@click.option("--shift", "shift_arg", required=True)
@click.option("--shift-kind", type=click.Choice(SHIFT_KINDS), default="adjacency",
              show_default=True)
@click.option("--filter", "filter_path", required=True, type=click.Path(exists=True),
              help="filter JSON as produced by the library")
@click.option("--signal", "signal_arg", required=True, help="file path or random:SEED")
@click.option("--mode", type=click.Choice(SIM_MODES), default=None)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="write the full trace JSON here")
def simulate_cmd(shift_arg, shift_kind, filter_path, signal_arg, mode, trace_path):
    """Run a filter as synchronous message passing and print the output."""
    shift, _ = _load_shift(shift_arg, shift_kind)
    filt = filter_from_json(Path(filter_path).read_text(), shift)
    x = _load_vector(signal_arg, shift.n)
    trace = simulate(filt, x, mode=mode, record_states=trace_path is not None)
    if trace_path:
        payload = {
            "rounds": trace.rounds,
            "messages_per_round": list(trace.messages_per_round),
            "output": trace.output.tolist(),
            "node_memory": [s.memory.tolist() for s in trace.node_states],
        }
        Path(trace_path).write_text(json.dumps(payload, indent=2) + "\n")
    click.echo(json.dumps({"rounds": trace.rounds, "output": trace.output.tolist()}))


main.add_command(simulate_cmd, name="simulate")


@main.command()
@click.option("--shift", "shift_arg", required=True)
@click.option("--shift-kind", type=click.Choice(SHIFT_KINDS), default="adjacency",
              show_default=True)
@click.option("--tol", type=float, default=None, help="eigenvalue-equality tolerance")
@click.option("--save-graph", type=click.Path(), default=None,
              help="export the generated/loaded graph as an edge list")
def spectrum(shift_arg, shift_kind, tol, save_graph):
    """Print eigenvalues, the distinct count, and equal-eigenvalue classes."""
    shift, graph = _load_shift(shift_arg, shift_kind)
    if save_graph:
        if graph is None:
            raise ParameterError("--save-graph needs a graph-backed shift")
        write_edgelist(graph, save_graph)
    spec = decompose(shift, tol=tol)
    payload = {
        "eigenvalues_re": np.real(spec.values).tolist(),
        "eigenvalues_im": np.imag(spec.values).tolist(),
        "distinct_count": spec.distinct_count,
        "eigclasses": [list(c) for c in spec.eigclasses],
        "tol": spec.tol,
    }
    click.echo(json.dumps(payload, indent=2))


@main.command(name="shift-design")
@click.option("--graph", "graph_arg", required=True,
              help="file:<edgelist> or generator 'model:n=..,seed=..'")
@click.option("--a-vec", required=True, help="file path or random-positive:SEED")
@click.option("--b-vec", default=None, help="defaults to a-vec")
@click.option("--mu", type=float, default=1.0, show_default=True)
@click.option("--subgraph", type=click.Choice(["bfs-tree", "full-graph"]),
              default="bfs-tree", show_default=True)
@click.option("--output-shift", type=click.Path(), default=None,
              help="write the designed shift as an edge list")
def shift_design_cmd(graph_arg, a_vec, b_vec, mu, subgraph, output_shift):
    """Re-weight a subgraph so a rank-one target becomes implementable."""
    if graph_arg.startswith("file:"):
        graph = read_edgelist(graph_arg[5:])
    else:
        from .graphs import generate

        graph = generate(_parse_generator(graph_arg))
    a = _load_vector(a_vec, graph.n)
    b = _load_vector(b_vec, graph.n) if b_vec else None
    target = RankOneTarget.from_vectors(a, b)
    design = build_rank_one_shift(graph, target, mu=mu, subgraph=subgraph)
    if output_shift:
        write_shift(design.shift, output_shift)
    payload = {
        "mu": design.mu,
        "eig_index": design.eig_index,
        "right_residual": design.right_residual,
        "left_residual": design.left_residual,
        "eigenvalue_simple": True,
        "n_nonzero": int(np.count_nonzero(design.shift.matrix)),
    }
    click.echo(json.dumps(payload, indent=2))


def _make_exp_command(name):
    @click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                  help="YAML config; defaults are used when omitted")
    @click.option("--seed", type=int, default=None, help="override the master seed")
    @click.option("--out-dir", type=click.Path(), default=".", show_default=True)
    def _cmd(config_path, seed, out_dir):
        if config_path:
            mapping = yaml.safe_load(Path(config_path).read_text()) or {}
            mapping.setdefault("experiment", name)
            if mapping["experiment"] != name:
                raise ParameterError(
                    f"config is for {mapping['experiment']!r}, command is exp:{name}"
                )
            if seed is not None:
                mapping["seed"] = seed
            cfg = config_from_mapping(mapping)
        else:
            cfg = default_config(name, seed=seed if seed is not None else 0)
        result = run_experiment(cfg)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{name}.csv"
        manifest_path = out / f"{name}.manifest.json"
        write_csv(result, csv_path)
        write_manifest(result, manifest_path)
        click.echo(f"wrote {csv_path} and {manifest_path}")

    _cmd.__name__ = f"exp_{name.replace('-', '_')}"
    _cmd.__doc__ = f"Run the {name} experiment and write CSV + manifest."
    return click.command(name=f"exp:{name}")(_cmd)


for _name in EXPERIMENTS:
    main.add_command(_make_exp_command(_name))


def cli_main(argv=None) -> int:
    """Programmatic entry point returning the exit status."""
    try:
        main(args=argv, standalone_mode=False)
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.UsageError:
        return 2
    except ParameterError:
        return 2
    except GFDesignError:
        return 3
    return 0


if __name__ == "__main__":
    main()
