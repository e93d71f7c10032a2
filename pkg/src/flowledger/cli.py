"""Command-line front door: compile, validate, run, serve, keygen, verify-chain."""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import click

from .bpmn import parse_bpmn, validate_model
from .compiler import compile_model, load_program, save_program
from .docstore import DocStore
from .errors import FlowledgerError
from .keys import generate_signer, load_keydir, save_signer, signer_from_label
from .ledger import Ledger
from .scenario import load_scenario, run_scenario
from .service import ServiceConfig, serve as run_service


@click.group()
def main() -> None:
    """Compile BPMN collaborations to monitor programs and run them on a
    simulated ledger with certified document exchange."""


@main.command()
@click.argument("model_path", type=click.Path(exists=True, path_type=Path))
@click.option("-o", "--out", "out_path", type=click.Path(path_type=Path),
              default=None, help="Program file to write (canonical JSON).")
def compile(model_path: Path, out_path: Path | None) -> None:
    """Compile a BPMN file into a monitor program and print its id."""
    try:
        model = parse_bpmn(model_path.read_bytes())
        diagnostics = validate_model(model)
        if any(d.is_error() for d in diagnostics):
            for d in diagnostics:
                click.echo(f"{d.severity}: {d.code} at {d.node}: {d.message}", err=True)
            sys.exit(1)
        program = compile_model(model)
    except FlowledgerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if out_path is None:
        out_path = model_path.with_suffix(".program.json")
    save_program(program, out_path)
    click.echo(program.program_id)


@main.command()
@click.argument("model_path", type=click.Path(exists=True, path_type=Path))
def validate(model_path: Path) -> None:
    """Parse and validate a BPMN file, printing every diagnostic."""
    try:
        model = parse_bpmn(model_path.read_bytes())
    except FlowledgerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    diagnostics = validate_model(model)
    for d in diagnostics:
        click.echo(f"{d.severity}: {d.code} at {d.node}: {d.message}")
    if any(d.is_error() for d in diagnostics):
        sys.exit(1)
    click.echo("ok")


@main.command()
@click.argument("program_path", type=click.Path(exists=True, path_type=Path))
@click.argument("scenario_path", type=click.Path(exists=True, path_type=Path))
@click.option("--keys", "keys_dir", type=click.Path(exists=True, path_type=Path),
              required=True, help="Directory of <lane>.key files (see keygen).")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Run directory for chain.ndjson, docs/ and trace.txt.")
def run(program_path: Path, scenario_path: Path, keys_dir: Path,
        out_dir: Path | None) -> None:
    """Execute a scenario script against an in-process engine and ledger."""
    program = load_program(program_path)
    scenario = load_scenario(scenario_path)
    keys = load_keydir(keys_dir)
    if out_dir is None:
        out_dir = Path("run-" + program.program_id[4:14])
    out_dir.mkdir(parents=True, exist_ok=True)
    chain_path = out_dir / "chain.ndjson"
    if chain_path.exists():
        chain_path.unlink()

    ledger = Ledger(chain_path)
    store = DocStore(out_dir / "docs")
    monitor_key = keys.get("monitor") or signer_from_label("monitor")
    try:
        result = run_scenario(program, scenario, keys, ledger, store, monitor_key,
                              base_dir=scenario_path.parent)
    except FlowledgerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    (out_dir / "trace.txt").write_text("\n".join(result.trace) + "\n")
    for line in result.trace:
        click.echo(line)
    if not result.ok:
        click.echo(f"divergence: {result.divergence}", err=True)
        sys.exit(2)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON config {port, dataDir, blockBatchSize, ...}.")
def serve(config_path: Path | None) -> None:
    """Run the HTTP service (state persists under the data directory)."""
    run_service(ServiceConfig.load(config_path))


@main.command()
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--lanes", required=True,
              help="Comma-separated lane ids to generate keys for.")
@click.option("--seed", default=None,
              help="Derive keys deterministically from this seed label.")
def keygen(out_dir: Path, lanes: str, seed: str | None) -> None:
    """Generate Ed25519 keypairs, one per lane, plus a monitor key."""
    names = [lane.strip() for lane in lanes.split(",") if lane.strip()]
    for name in names + ["monitor"]:
        signer = (signer_from_label(f"{seed}:{name}") if seed
                  else generate_signer())
        save_signer(signer, out_dir, name)
        click.echo(f"{name}: {signer.public_hex}")


@main.command("verify-chain")
@click.argument("chain_path", type=click.Path(exists=True, path_type=Path))
def verify_chain(chain_path: Path) -> None:
    """Check every block hash, link, signature and nonce in a chain file."""
    ledger = Ledger(chain_path)
    if ledger.verify_chain():
        click.echo(f"ok: {ledger.height() + 1} blocks, "
                   f"{len(ledger.all_txs())} transactions")
    else:
        click.echo("INVALID chain", err=True)
        sys.exit(1)


@main.command()
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def fixtures(out_dir: Path) -> None:
    """Copy the bundled example models and scenarios into a directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    base = resources.files("flowledger") / "fixtures"
    for entry in base.iterdir():
        if entry.name.endswith((".bpmn", ".json")):
            (out_dir / entry.name).write_bytes(entry.read_bytes())
            click.echo(out_dir / entry.name)


if __name__ == "__main__":
    main()
