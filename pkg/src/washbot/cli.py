"""Command-line entry point: ingest, serve, ask, and the eval subcommands."""

from __future__ import annotations

import json
import sys

from pathlib import Path

import click

from . import api, gateway
from .config import AppConfig, InvalidConfig, config_resolve
from .eval import (
    default_missing,
    load_assessments_csv,
    load_questions,
    load_run,
    load_tam_csv,
    per_expert_breakdown,
    render_report,
    run_batch,
    save_run,
    screen_inconsistent,
    construct_stats,
    tally,
    ScreeningRule,
)
from .ingest import load_document, load_index, run_ingest
from .providers import ProviderError
from .rag import RagPolicy, generate_answer
from .store import JsonlStore

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REFUSED = 2


def _resolve(config_path: str | None, **flags) -> AppConfig:
    try:
        return config_resolve(config_path, flags=flags)
    except InvalidConfig as exc:
        raise click.ClickException(str(exc))


@click.group()
def main() -> None:
    """Topic-scoped Q&A bot over WhatsApp-compatible webhooks, with eval tools."""


@main.command("ingest")
@click.option("--input", "inputs", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), help="Source document path (repeatable).")
@click.option("--format", "fmt", type=click.Choice(["plain", "markdown"]), default="plain")
@click.option("--chunk-size", type=int, default=None)
@click.option("--overlap", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Artifact output path.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--provider", type=click.Choice(["mock", "http"]), default=None)
@click.option("--dim", "embed_dim", type=int, default=None)
def ingest_cmd(inputs, fmt, chunk_size, overlap, out, config_path, provider, embed_dim) -> None:
    """Build a vector index artifact from source documents."""
    cfg = _resolve(config_path, chunk_size=chunk_size, overlap=overlap,
                   provider=provider, embed_dim=embed_dim,
                   index_path=out)
    embedder, _llm = api.build_providers(cfg)
    try:
        documents = [load_document(path, fmt) for path in inputs]
        summary = run_ingest(documents, chunk_size=cfg.chunk_size, overlap=cfg.overlap,
                             embedder=embedder, out=cfg.index_path)
    except (OSError, ValueError, ProviderError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {summary.out_path}: {summary.chunks} chunks, dim {summary.dim}, "
               f"embedder {summary.embedder_tag}")


@main.command("ask")
@click.argument("question")
@click.option("--index", "index_path", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--tau", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--provider", type=click.Choice(["mock", "http"]), default=None)
def ask_cmd(question, index_path, config_path, tau, k, provider) -> None:
    """Answer one question from the index and print sources and latency."""
    cfg = _resolve(config_path, index_path=index_path, tau=tau, k=k, provider=provider)
    try:
        index = load_index(cfg.index_path)
    except OSError as exc:
        click.echo(f"error: cannot open index {cfg.index_path}: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    embedder, llm = api.build_providers(cfg)
    if index.embedder_tag != embedder.tag:
        click.echo(f"error: index embedder '{index.embedder_tag}' does not match "
                   f"configured provider '{embedder.tag}'", err=True)
        sys.exit(EXIT_ERROR)
    policy_kwargs = {"k": cfg.k, "tau": cfg.tau}
    if cfg.prompt_template:
        policy_kwargs["prompt_template"] = cfg.prompt_template
    if cfg.refusal_text:
        policy_kwargs["refusal_text"] = cfg.refusal_text
    try:
        answer = generate_answer(question, index, embedder, llm, RagPolicy(**policy_kwargs))
    except (ProviderError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(answer.text)
    for chunk_id, score in answer.retrieved:
        click.echo(f"  source s{chunk_id}  score {score:.4f}")
    click.echo(f"  latency {answer.latency:.3f} s")
    sys.exit(EXIT_REFUSED if answer.refused else EXIT_OK)


@main.command("serve")
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--index", "index_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data-dir", default=None)
@click.option("--ui-dir", default=None)
@click.option("--live-transport", is_flag=True, default=False,
              help="Send replies through the Business Cloud API instead of logging them.")
def serve_cmd(port, host, index_path, config_path, data_dir, ui_dir, live_transport) -> None:
    """Run the webhook endpoint and the local JSON API."""
    import uvicorn

    cfg = _resolve(config_path, port=port, host=host, index_path=index_path,
                   data_dir=data_dir, ui_dir=ui_dir)
    gateway_cfg = gateway.GatewayConfig.from_env()
    if live_transport:
        transport = gateway.HttpTransport(gateway_cfg)
    else:
        transport = gateway.MockTransport()
        click.echo("using recording transport; replies are not delivered to WhatsApp")
    try:
        service = api.build_service(cfg, transport=transport)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    app = api.create_app(service, gateway_cfg, ui_dir=cfg.ui_dir)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")


@main.group("eval")
def eval_group() -> None:
    """Batch runs, expert-grade tallies and questionnaire statistics."""


@eval_group.command("run")
@click.option("--questions", "questions_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--index", "index_path", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data-dir", default=None, help="Also persist results into this store.")
def eval_run_cmd(questions_path, out_path, index_path, config_path, data_dir) -> None:
    """Answer a question set and record answers plus latency."""
    cfg = _resolve(config_path, index_path=index_path, data_dir=data_dir)
    try:
        questions = load_questions(questions_path)
        index = load_index(cfg.index_path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    embedder, llm = api.build_providers(cfg)
    policy = RagPolicy(k=cfg.k, tau=cfg.tau)
    store = JsonlStore(cfg.data_dir) if data_dir else None

    def engine(text: str):
        return generate_answer(text, index, embedder, llm, policy)

    run = run_batch(questions, engine, store=store)
    save_run(run, out_path)
    answered = sum(1 for r in run.results if not r.failed)
    click.echo(f"run {run.run_id}: {answered}/{len(run.results)} answered, saved to {out_path}")
    if run.summary:
        click.echo(f"latency mean {run.summary.mean:.2f} s (min: {run.summary.min:.2f}, "
                   f"max: {run.summary.max:.2f})")


@eval_group.command("grade")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--assessments", "assessments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--experts", "expert_count", type=int, required=True,
              help="Expected number of distinct experts in the CSV.")
@click.option("--out-json", type=click.Path(dir_okay=False), default=None)
def eval_grade_cmd(run_path, assessments_path, expert_count, out_json) -> None:
    """Aggregate expert grades over a run's question set."""
    try:
        run = load_run(run_path)
        assessments = load_assessments_csv(assessments_path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    experts = sorted({a.expert_id for a in assessments})
    if len(experts) != expert_count:
        raise click.ClickException(
            f"expected {expert_count} experts, found {len(experts)}: {', '.join(experts)}"
        )
    questions = [result.question_id for result in run.results]
    try:
        grid = default_missing(assessments, experts, questions)
    except KeyError as exc:
        raise click.ClickException(str(exc))
    grade_tally = tally(grid)
    click.echo(f"total cells: {grade_tally.total} (defaults filled: {grid.defaults_filled})")
    for grade, count in grade_tally.counts.items():
        click.echo(f"  {grade.value}: {count}")
    click.echo(f"perfect+sufficient: {grade_tally.perfect_or_sufficient_count} "
               f"({100 * grade_tally.perfect_or_sufficient_share:.1f}%)")
    if out_json:
        doc = {
            "defaults_filled": grid.defaults_filled,
            "counts": {g.value: c for g, c in grade_tally.counts.items()},
            "per_expert": {e: {g.value: c for g, c in row.items()}
                           for e, row in per_expert_breakdown(grid).items()},
        }
        Path(out_json).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {out_json}")


@eval_group.command("tam")
@click.option("--responses", "responses_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--screen-gap", type=int, default=3, show_default=True)
@click.option("--screen-min", type=int, default=2, show_default=True)
@click.option("--out-json", type=click.Path(dir_okay=False), default=None)
def eval_tam_cmd(responses_path, screen_gap, screen_min, out_json) -> None:
    """Screen questionnaire responses and compute construct statistics."""
    try:
        responses = load_tam_csv(responses_path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    screening = screen_inconsistent(responses, ScreeningRule(gap=screen_gap, min_constructs=screen_min))
    click.echo(f"responses: {len(responses)}, kept: {len(screening.kept)}, "
               f"removed: {len(screening.removed)}")
    try:
        rows = construct_stats(screening.kept)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    for row in rows:
        alpha = "n/a" if row.alpha is None else f"{row.alpha:.2f}"
        r_part = ""
        if row.r_with_intention is not None:
            r_part = f"  r(intention)={row.r_with_intention:.2f}{row.stars}"
        click.echo(f"  {row.construct}: mean={row.mean:.2f} sd={row.sd:.2f} alpha={alpha}{r_part}")
    if out_json:
        doc = {
            "kept": len(screening.kept),
            "removed": [r.respondent_id for r in screening.removed],
            "constructs": [
                {"construct": row.construct, "mean": row.mean, "sd": row.sd,
                 "alpha": row.alpha, "r_with_intention": row.r_with_intention,
                 "p_value": row.p_value, "stars": row.stars}
                for row in rows
            ],
        }
        Path(out_json).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {out_json}")


@eval_group.command("report")
@click.option("--run", "run_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--assessments", "assessments_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--experts", "expert_count", type=int, default=None)
@click.option("--tam", "tam_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--screen-gap", type=int, default=3, show_default=True)
@click.option("--screen-min", type=int, default=2, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@click.option("--data-dir", default=None, help="Also store the report for the dashboard API.")
def eval_report_cmd(run_path, assessments_path, expert_count, tam_path,
                    screen_gap, screen_min, out_path, json_out, data_dir) -> None:
    """Render the combined evaluation report (markdown + JSON)."""
    run = grid = grade_tally = breakdown = rows = None
    try:
        if run_path:
            run = load_run(run_path)
        if assessments_path:
            if run is None:
                raise click.ClickException("--assessments needs --run for the question list")
            if expert_count is None:
                raise click.ClickException("--assessments needs --experts")
            assessments = load_assessments_csv(assessments_path)
            experts = sorted({a.expert_id for a in assessments})
            if len(experts) != expert_count:
                raise click.ClickException(f"expected {expert_count} experts, found {len(experts)}")
            grid = default_missing(assessments, experts,
                                   [result.question_id for result in run.results])
            grade_tally = tally(grid)
            breakdown = per_expert_breakdown(grid)
        if tam_path:
            responses = load_tam_csv(tam_path)
            screening = screen_inconsistent(
                responses, ScreeningRule(gap=screen_gap, min_constructs=screen_min))
            rows = construct_stats(screening.kept)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))

    report = render_report(run=run, tally=grade_tally, breakdown=breakdown,
                           construct_rows=rows, grid=grid)
    Path(out_path).write_text(report.markdown, encoding="utf-8")
    click.echo(f"wrote {out_path}")
    if json_out:
        Path(json_out).write_text(json.dumps(report.json_doc, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {json_out}")
    if data_dir:
        store = JsonlStore(data_dir)
        store.put("eval_reports", report.report_id, report.json_doc)
        click.echo(f"stored report {report.report_id} in {data_dir}")


if __name__ == "__main__":
    main()
