"""Operator CLI: seed the bank, manage rules, moderate suggestions, inspect stats.

Two mutually exclusive backends, selected by ``--server``:

* file mode (default) opens the snapshot directly under an exclusive lock,
  so it refuses to run while a service instance owns the file;
* server mode talks to a running service's /v1/admin endpoints over HTTP.

Exit code 0 on success; on failure, 1 with the error printed as
``{"error_code", "message"}`` JSON when ``--json`` is set.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import click
import httpx

from .bank import KnowledgeBank, SnapshotFileLock, parse_corpus, suggestion_views
from .errors import MalformedCorpus, MalformedRequest, MalformedRules, TeachRecError
from .features import load_default_schema, load_schema
from .rules import load_rules, rules_to_document

# overridable in tests to route server mode through an in-process ASGI transport
def _default_client_factory(base_url: str) -> httpx.Client:
    return httpx.Client(base_url=base_url, timeout=10.0)


HTTP_CLIENT_FACTORY = _default_client_factory


class _FileBackend:
    """Direct snapshot access; every command runs under the file lock."""

    def __init__(self, bank_path: Path, schema_path: Optional[Path]):
        self.bank_path = bank_path
        self.schema = load_schema(schema_path) if schema_path else load_default_schema()

    @contextmanager
    def open(self, mutating: bool):
        with SnapshotFileLock(self.bank_path):
            # no snapshot_path here: reads must leave the file untouched
            bank = KnowledgeBank(self.schema)
            if self.bank_path.exists():
                bank.load(self.bank_path)
            yield bank
            if mutating:
                bank.save(self.bank_path)

    def stats(self) -> dict:
        with self.open(mutating=False) as bank:
            return bank.stats()

    def seed(self, document: object) -> dict:
        recs = parse_corpus(document)
        with self.open(mutating=True) as bank:
            return {"imported": bank.import_recommendations(recs)}

    def rules_validate(self, document: object) -> dict:
        with self.open(mutating=False) as bank:
            rules = load_rules(document, self.schema, bank.recommendation_ids())
            return {"valid": True, "count": len(rules)}

    def rules_load(self, document: object) -> dict:
        with self.open(mutating=True) as bank:
            rules = load_rules(document, self.schema, bank.recommendation_ids())
            bank.set_rules(rules)
            return {"loaded": len(rules)}

    def rules_list(self) -> dict:
        with self.open(mutating=False) as bank:
            return rules_to_document(bank.rules())

    def suggestions(self, state: Optional[str]) -> dict:
        with self.open(mutating=False) as bank:
            return {"suggestions": suggestion_views(bank, state)}

    def approve(self, suggestion_id: str, fields: dict) -> dict:
        with self.open(mutating=True) as bank:
            rec_id = bank.approve_suggestion(suggestion_id, **fields)
            return {"outcome": "approved", "rec_id": rec_id}

    def reject(self, suggestion_id: str) -> dict:
        with self.open(mutating=True) as bank:
            bank.reject_suggestion(suggestion_id)
            return {"outcome": "rejected"}

    def snapshot_export(self) -> dict:
        with self.open(mutating=False) as bank:
            return bank.to_document()

    def snapshot_import(self, document: object) -> dict:
        with self.open(mutating=True) as bank:
            bank.load_document(document, source="<import>")
            return {"loaded": True, "counts": bank.counts()}


class _HttpBackend:
    """Same commands, proxied to a running service's admin endpoints."""

    def __init__(self, base_url: str):
        self.client = HTTP_CLIENT_FACTORY(base_url)

    def _call(self, method: str, path: str, document: object = None, params: dict = None):
        response = self.client.request(
            method,
            path,
            content=None if document is None else json.dumps(document),
            params=params,
        )
        try:
            payload = response.json()
        except json.JSONDecodeError:
            payload = {}
        if response.status_code >= 400:
            error = TeachRecError(payload.get("message", f"HTTP {response.status_code}"))
            error.code = payload.get("error_code", "InternalError")
            raise error
        return payload

    def stats(self) -> dict:
        return self._call("GET", "/v1/admin/stats")

    def seed(self, document: object) -> dict:
        return self._call("POST", "/v1/admin/seed", document)

    def rules_validate(self, document: object) -> dict:
        return self._call("POST", "/v1/admin/rules/validate", document)

    def rules_load(self, document: object) -> dict:
        return self._call("POST", "/v1/admin/rules", document)

    def rules_list(self) -> dict:
        return self._call("GET", "/v1/admin/rules")

    def suggestions(self, state: Optional[str]) -> dict:
        params = {} if state is None else {"state": state}
        return self._call("GET", "/v1/admin/suggestions", params=params)

    def approve(self, suggestion_id: str, fields: dict) -> dict:
        body = {"action": "approve", **fields}
        return self._call("POST", f"/v1/admin/suggestions/{suggestion_id}/resolve", body)

    def reject(self, suggestion_id: str) -> dict:
        body = {"action": "reject"}
        return self._call("POST", f"/v1/admin/suggestions/{suggestion_id}/resolve", body)

    def snapshot_export(self) -> dict:
        return self._call("GET", "/v1/admin/snapshot")

    def snapshot_import(self, document: object) -> dict:
        return self._call("POST", "/v1/admin/snapshot", document)


def _read_json_file(path: str, error_cls) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise error_cls(f"{path}: cannot read: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise error_cls(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _emit(ctx: click.Context, result: dict, human: str) -> None:
    if ctx.obj["json"]:
        click.echo(json.dumps(result, sort_keys=True))
    else:
        click.echo(human)


def _run(ctx: click.Context, operation) -> dict:
    try:
        return operation()
    except TeachRecError as exc:
        if ctx.obj["json"]:
            click.echo(json.dumps({"error_code": exc.code, "message": exc.message}))
        else:
            click.echo(f"error [{exc.code}]: {exc.message}", err=True)
        ctx.exit(1)


@click.group()
@click.option("--bank", "bank_path", default="bank.json", show_default=True,
              help="Snapshot file (file mode).")
@click.option("--schema", "schema_path", default=None,
              help="Feature schema file; defaults to the packaged course profile.")
@click.option("--server", "server_url", default=None,
              help="Base URL of a running service; switches to HTTP mode.")
@click.option("--json", "json_output", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, bank_path, schema_path, server_url, json_output):
    """Maintain the recommendation bank."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = json_output
    try:
        if server_url:
            ctx.obj["backend"] = _HttpBackend(server_url)
        else:
            ctx.obj["backend"] = _FileBackend(
                Path(bank_path), Path(schema_path) if schema_path else None
            )
    except TeachRecError as exc:
        if json_output:
            click.echo(json.dumps({"error_code": exc.code, "message": exc.message}))
        else:
            click.echo(f"error [{exc.code}]: {exc.message}", err=True)
        ctx.exit(1)


@main.command()
@click.argument("corpus_file")
@click.pass_context
def seed(ctx, corpus_file):
    """Import a recommendation corpus (all-or-nothing)."""
    def op():
        document = _read_json_file(corpus_file, MalformedCorpus)
        return ctx.obj["backend"].seed(document)

    result = _run(ctx, op)
    _emit(ctx, result, f"imported {result['imported']} recommendations")


@main.group()
def rules():
    """Validate, load, or list the expert rule set."""


@rules.command("validate")
@click.argument("rules_file")
@click.pass_context
def rules_validate(ctx, rules_file):
    """Check a rules file without changing anything."""
    def op():
        document = _read_json_file(rules_file, MalformedRules)
        return ctx.obj["backend"].rules_validate(document)

    result = _run(ctx, op)
    _emit(ctx, result, f"valid: {result['count']} rules")


@rules.command("load")
@click.argument("rules_file")
@click.pass_context
def rules_load(ctx, rules_file):
    """Validate a rules file and atomically replace the active set."""
    def op():
        document = _read_json_file(rules_file, MalformedRules)
        return ctx.obj["backend"].rules_load(document)

    result = _run(ctx, op)
    _emit(ctx, result, f"loaded {result['loaded']} rules")


@rules.command("list")
@click.pass_context
def rules_list(ctx):
    """Print the active rule set as a rules document."""
    result = _run(ctx, lambda: ctx.obj["backend"].rules_list())
    _emit(ctx, result, json.dumps(result, indent=2, sort_keys=True))


@main.group()
def moderate():
    """Review the suggestion queue."""


@moderate.command("list")
@click.option("--state", default=None, type=click.Choice(["pending", "approved", "rejected"]))
@click.pass_context
def moderate_list(ctx, state):
    """List suggestions with their proposer (or anonymous)."""
    result = _run(ctx, lambda: ctx.obj["backend"].suggestions(state))
    lines = [
        f"{s['suggestion_id']}  [{s['state']}]  from {s['proposer']}: {s['text']}"
        for s in result["suggestions"]
    ] or ["no suggestions"]
    _emit(ctx, result, "\n".join(lines))


@moderate.command("approve")
@click.argument("suggestion_id")
@click.option("--rec-id", required=True)
@click.option("--title", required=True)
@click.option("--body", required=True)
@click.option("--interaction-mode", required=True)
@click.pass_context
def moderate_approve(ctx, suggestion_id, rec_id, title, body, interaction_mode):
    """Turn a pending suggestion into an active recommendation."""
    fields = {
        "rec_id": rec_id,
        "title": title,
        "body": body,
        "interaction_mode": interaction_mode,
    }
    result = _run(ctx, lambda: ctx.obj["backend"].approve(suggestion_id, fields))
    _emit(ctx, result, f"approved as {result['rec_id']}")


@moderate.command("reject")
@click.argument("suggestion_id")
@click.pass_context
def moderate_reject(ctx, suggestion_id):
    """Mark a pending suggestion rejected."""
    result = _run(ctx, lambda: ctx.obj["backend"].reject(suggestion_id))
    _emit(ctx, result, "rejected")


@main.command()
@click.pass_context
def stats(ctx):
    """Bank statistics: recommendations by mode/origin/status, ratings, sessions."""
    result = _run(ctx, lambda: ctx.obj["backend"].stats())
    if ctx.obj["json"]:
        _emit(ctx, result, "")
        return
    recs = result["recommendations"]
    lines = [
        f"recommendations: {recs['total']}",
        f"  by mode:   {json.dumps(recs['by_mode'], sort_keys=True)}",
        f"  by origin: {json.dumps(recs['by_origin'], sort_keys=True)}",
        f"  by status: {json.dumps(recs['by_status'], sort_keys=True)}",
        f"ratings: {result['ratings']['count']}"
        f" (means: {json.dumps(result['ratings']['mean_by_rec'], sort_keys=True)})",
        f"sessions: {result['sessions']['count']}",
        f"suggestions: {json.dumps(result['suggestions'], sort_keys=True)}",
    ]
    click.echo("\n".join(lines))


@main.group()
def snapshot():
    """Export or import the whole bank snapshot."""


@snapshot.command("export")
@click.option("--out", default=None, help="Write to a file instead of stdout.")
@click.pass_context
def snapshot_export(ctx, out):
    """Dump the snapshot document."""
    result = _run(ctx, lambda: ctx.obj["backend"].snapshot_export())
    text = json.dumps(result, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        _emit(ctx, {"exported": out}, f"exported to {out}")
    else:
        click.echo(text)


@snapshot.command("import")
@click.argument("snapshot_file")
@click.pass_context
def snapshot_import(ctx, snapshot_file):
    """Replace bank state from a snapshot document (all-or-nothing)."""
    def op():
        document = _read_json_file(snapshot_file, MalformedRequest)
        return ctx.obj["backend"].snapshot_import(document)

    result = _run(ctx, op)
    _emit(ctx, result, f"imported: {json.dumps(result['counts'], sort_keys=True)}")


if __name__ == "__main__":
    main()
