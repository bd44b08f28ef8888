"""Command line front end.

Subcommands: run, eval, datagen, maskgen, serve-arena, tools. Exit codes:
0 on success, 1 on domain errors (bad inputs, unreachable backends),
2 on usage errors. A JSON config file (pointed at by ``--config`` or the
``AGENT_CONFIG`` environment variable) supplies per-subcommand defaults
using argument names with underscores; explicit flags win. Output files
are written atomically, so a failing command leaves nothing behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .arena import ArenaAgent, RatingTable, replay_battle_log
from .core import (
    AgentError,
    DocumentError,
    parse_conversation,
    schema_from_dict,
    schema_to_dict,
)
from .evaluation import (
    evaluate,
    load_conversations_jsonl,
    save_conversations_jsonl,
)
from .executor import Agent
from .llm import HttpBackend, LlmBackend, LlmConfig, ScriptedBackend
from .memory import KnowledgeStore
from .toolkit import (
    ToolRegistry,
    default_registry,
    load_tool_manifest,
)
from .trainprep import (
    dataset_stats,
    demo_backend_trio,
    generate_instances,
    instance_from_dict,
    weight_mask,
)

CONFIG_ENV_VAR = "AGENT_CONFIG"


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    target = Path(path)
    handle, tmp_name = tempfile.mkstemp(
        dir=target.parent if str(target.parent) else ".",
        prefix=f".{target.name}.",
    )
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as tmp:
            tmp.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def load_config(path: str | None) -> dict:
    config_path = path or os.environ.get(CONFIG_ENV_VAR)
    if not config_path:
        return {}
    try:
        obj = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DocumentError("config must be a JSON object")
    return obj


def make_backend(spec: str, config: LlmConfig | None = None) -> LlmBackend:
    """Build a backend from ``scripted:FILE`` or an HTTP URL spec."""
    if spec.startswith("scripted:"):
        script_path = spec[len("scripted:") :]
        try:
            obj = json.loads(Path(script_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DocumentError(f"cannot read script: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DocumentError(f"script is not valid JSON: {exc}") from exc
        cycle = False
        if isinstance(obj, dict):
            cycle = bool(obj.get("cycle", False))
            obj = obj.get("script")
        if not isinstance(obj, list) or not all(
            isinstance(entry, str) for entry in obj
        ):
            raise DocumentError("script must be a JSON array of strings")
        return ScriptedBackend(obj, config=config, cycle=cycle)
    if spec.startswith("http:") or spec.startswith("https:"):
        url = spec
        if spec.startswith("http:") and not spec.startswith("http://"):
            url = spec[len("http:") :]
        return HttpBackend(url, config=config)
    raise DocumentError(
        f"backend spec {spec!r} must be scripted:FILE or an HTTP URL"
    )


def build_registry(manifest_path: str | None) -> ToolRegistry:
    if manifest_path is None:
        return default_registry()
    registry = default_registry()
    for schema in load_tool_manifest(manifest_path):
        registry.register_tool(schema)
    return registry


def build_knowledge(directory: str | None) -> KnowledgeStore | None:
    if directory is None:
        return None
    root = Path(directory)
    if not root.is_dir():
        raise DocumentError(f"knowledge dir {directory!r} is not a directory")
    store = KnowledgeStore()
    for path in sorted(root.iterdir()):
        if path.is_file() and not path.name.startswith("."):
            store.ingest(path.name, path.read_text(encoding="utf-8"))
    return store


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    backend = make_backend(args.backend)
    agent = Agent(
        backend=backend,
        registry=build_registry(args.tools),
        knowledge=build_knowledge(args.knowledge_dir),
        max_iterations=args.max_iter,
    )
    record = agent.run(args.query)
    if args.trace:
        atomic_write(
            args.trace,
            json.dumps(
                record.to_dict(), sort_keys=True, ensure_ascii=False, indent=2
            )
            + "\n",
        )
    print(record.final_answer())
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gold = load_conversations_jsonl(args.gold)
    pred = load_conversations_jsonl(args.pred)
    report = evaluate(gold, pred, micro_f1=args.micro_f1)
    if args.report:
        atomic_write(
            args.report,
            json.dumps(
                report.to_dict(), sort_keys=True, ensure_ascii=False, indent=2
            )
            + "\n",
        )
    print(f"action_em={report.action_em:.2f}")
    print(f"argument_f1={report.argument_f1:.2f}")
    print(f"rouge_l={report.rouge_l:.2f}")
    return 0


def cmd_datagen(args: argparse.Namespace) -> int:
    apis = load_tool_manifest(args.apis)
    if args.user_backend or args.agent_backend or args.api_backend:
        if not (args.user_backend and args.agent_backend and args.api_backend):
            raise DocumentError(
                "provide all three of --user-backend, --agent-backend, "
                "--api-backend or none"
            )
        trio = (
            make_backend(args.user_backend),
            make_backend(args.agent_backend),
            make_backend(args.api_backend),
        )
    else:
        trio = demo_backend_trio(
            apis, args.n, seed=args.seed, bad_rate=args.bad_rate
        )
    instances = generate_instances(
        *trio, apis=apis, n=args.n, seed=args.seed
    )
    lines = [
        json.dumps(inst.to_dict(), sort_keys=True, ensure_ascii=False)
        for inst in instances
    ]
    atomic_write(args.out, "\n".join(lines) + "\n" if lines else "")
    stats = dataset_stats(instances)
    if args.stats:
        atomic_write(
            args.stats,
            json.dumps(stats, sort_keys=True, ensure_ascii=False, indent=2)
            + "\n",
        )
    print(
        f"generated {stats['total']} instance(s): "
        f"{stats['kept']} kept, {stats['filtered']} filtered"
    )
    return 0


def cmd_maskgen(args: argparse.Namespace) -> int:
    try:
        text = Path(args.in_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read input: {exc}") from exc
    out_lines: list[str] = []
    skipped = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"line {lineno}: {exc}") from exc
        if isinstance(obj, dict) and "conversation" in obj:
            instance = instance_from_dict(obj)
            if instance.verdict != "kept":
                skipped += 1
                continue
            conversation = instance.conversation
        else:
            conversation = parse_conversation(line)
        sample = weight_mask(conversation)
        out_lines.append(
            json.dumps(
                {
                    "id": conversation.id,
                    "tokens": list(sample.tokens),
                    "weights": list(sample.weights),
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    atomic_write(args.out, "\n".join(out_lines) + "\n" if out_lines else "")
    print(f"wrote {len(out_lines)} mask(s), skipped {skipped} filtered")
    return 0


def load_arena_pool(path: str) -> list[ArenaAgent]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(f"cannot read pool: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"pool is not valid JSON: {exc}") from exc
    if not isinstance(obj, list) or len(obj) < 2:
        raise DocumentError("pool must be a JSON array of at least two agents")
    registry = default_registry()
    pool: list[ArenaAgent] = []
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict):
            raise DocumentError(f"pool[{i}] must be an object")
        agent_id = entry.get("agent_id")
        if not isinstance(agent_id, str) or not agent_id:
            raise DocumentError(f"pool[{i}] needs a non-empty agent_id")
        backend_spec = entry.get("backend")
        if isinstance(backend_spec, dict) and "script" in backend_spec:
            script = backend_spec.get("script")
            if not isinstance(script, list):
                raise DocumentError(f"pool[{i}] script must be an array")
            backend: LlmBackend = ScriptedBackend(
                [str(s) for s in script],
                cycle=bool(backend_spec.get("cycle", True)),
            )
        elif isinstance(backend_spec, str):
            backend = make_backend(backend_spec)
        else:
            raise DocumentError(
                f"pool[{i}] backend must be a spec string or an inline script"
            )
        kwargs = {}
        if isinstance(entry.get("system_prompt"), str):
            kwargs["system_prompt"] = entry["system_prompt"]
        if isinstance(entry.get("max_iterations"), int):
            kwargs["max_iterations"] = entry["max_iterations"]
        pool.append(
            ArenaAgent(
                agent_id=agent_id,
                agent=Agent(backend=backend, registry=registry, **kwargs),
            )
        )
    return pool


def cmd_serve_arena(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    pool = load_arena_pool(args.pool)
    table = RatingTable()
    if args.log and Path(args.log).exists():
        table = replay_battle_log(args.log)
    static_dir = args.static if args.static else None
    if static_dir is not None and not Path(static_dir).is_dir():
        raise DocumentError(f"static dir {static_dir!r} is not a directory")
    app = create_app(
        pool,
        table=table,
        log_path=args.log,
        seed=args.seed,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_tools_list(args: argparse.Namespace) -> int:
    schemas = (
        load_tool_manifest(args.tools)
        if args.tools
        else default_registry().schemas()
    )
    for schema in schemas:
        print(f"{schema.name}: {schema.description}")
        for p in schema.parameters:
            flag = "required" if p.required else "optional"
            print(f"  - {p.name} ({flag}): {p.description}")
    return 0


def cmd_tools_register(args: argparse.Namespace) -> int:
    try:
        obj = json.loads(Path(args.schema).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(f"cannot read schema: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"schema is not valid JSON: {exc}") from exc
    new_schemas = (
        [schema_from_dict(o, path=f"tools[{i}]") for i, o in enumerate(obj)]
        if isinstance(obj, list)
        else [schema_from_dict(obj)]
    )
    existing = (
        load_tool_manifest(args.tools) if Path(args.tools).exists() else []
    )
    merged = {schema.name: schema for schema in existing}
    for schema in new_schemas:
        merged[schema.name] = schema
    atomic_write(
        args.tools,
        json.dumps(
            [schema_to_dict(s) for s in merged.values()],
            indent=2,
            ensure_ascii=False,
        )
        + "\n",
    )
    print(f"registered {len(new_schemas)} tool(s) into {args.tools}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="agent", description="Tool-using agent runtime"
    )
    parser.add_argument(
        "--config",
        help=f"JSON config file (also read from ${CONFIG_ENV_VAR})",
    )
    subparsers = parser.add_subparsers(dest="command")
    registry: dict[str, argparse.ArgumentParser] = {}

    run = subparsers.add_parser("run", help="answer one query with an agent")
    run.add_argument("--query", help="user query to answer")
    run.add_argument("--tools", help="tool manifest JSON file")
    run.add_argument("--knowledge-dir", help="directory of UTF-8 documents")
    run.add_argument("--backend", help="scripted:FILE or an HTTP URL")
    run.add_argument("--max-iter", type=int, default=5)
    run.add_argument("--trace", help="write the run record JSON here")
    run.set_defaults(handler=cmd_run, required_flags=("query", "backend"))
    registry["run"] = run

    ev = subparsers.add_parser("eval", help="score predictions against gold")
    ev.add_argument("--gold", help="gold conversations JSONL")
    ev.add_argument("--pred", help="predicted conversations JSONL")
    ev.add_argument("--report", help="write the report JSON here")
    ev.add_argument(
        "--micro-f1",
        action="store_true",
        help="pool argument counts instead of averaging per request",
    )
    ev.set_defaults(handler=cmd_eval, required_flags=("gold", "pred"))
    registry["eval"] = ev

    dg = subparsers.add_parser("datagen", help="generate synthetic dialogues")
    dg.add_argument("--apis", help="API catalog JSON (tool manifest format)")
    dg.add_argument("--n", type=int, help="number of instances")
    dg.add_argument("--out", help="instances JSONL output")
    dg.add_argument("--stats", help="write corpus stats JSON here")
    dg.add_argument("--seed", type=int, default=0)
    dg.add_argument(
        "--bad-rate",
        type=float,
        default=0.0,
        help="fraction of deliberately broken demo instances",
    )
    dg.add_argument("--user-backend", help="backend spec for the user role")
    dg.add_argument("--agent-backend", help="backend spec for the agent role")
    dg.add_argument("--api-backend", help="backend spec for the API role")
    dg.set_defaults(handler=cmd_datagen, required_flags=("apis", "n", "out"))
    registry["datagen"] = dg

    mg = subparsers.add_parser("maskgen", help="emit loss-weight masks")
    mg.add_argument("--in", dest="in_path", help="instances or conversations JSONL")
    mg.add_argument("--out", help="masks JSONL output")
    mg.set_defaults(handler=cmd_maskgen, required_flags=("in_path", "out"))
    registry["maskgen"] = mg

    sa = subparsers.add_parser("serve-arena", help="serve the battle arena")
    sa.add_argument("--pool", help="agent pool JSON file")
    sa.add_argument("--host", default="127.0.0.1")
    sa.add_argument("--port", type=int, default=8080)
    sa.add_argument("--log", help="append decided battles to this JSONL file")
    sa.add_argument("--seed", type=int, default=None, help="RNG seed for pairing")
    sa.add_argument("--static", help="serve this directory at /")
    sa.set_defaults(handler=cmd_serve_arena, required_flags=("pool",))
    registry["serve-arena"] = sa

    tools = subparsers.add_parser("tools", help="inspect or edit manifests")
    tools_sub = tools.add_subparsers(dest="tools_command")
    tl = tools_sub.add_parser("list", help="list tools")
    tl.add_argument("--tools", help="tool manifest JSON file")
    tl.set_defaults(handler=cmd_tools_list, required_flags=())
    registry["tools list"] = tl
    tr = tools_sub.add_parser("register", help="add a tool to a manifest")
    tr.add_argument("--tools", help="tool manifest JSON file to update")
    tr.add_argument("--schema", help="JSON file with the new tool schema(s)")
    tr.set_defaults(handler=cmd_tools_register, required_flags=("tools", "schema"))
    registry["tools register"] = tr
    tools.set_defaults(tools_parser=tools)

    # Accept --config after the subcommand as well as before it.
    for sub in registry.values():
        sub.add_argument("--config", help=argparse.SUPPRESS)

    return parser, registry


def _apply_config(
    config: dict, registry: dict[str, argparse.ArgumentParser]
) -> None:
    for section, values in config.items():
        sub = registry.get(section)
        if sub is None or not isinstance(values, dict):
            continue
        sub.set_defaults(
            **{key.replace("-", "_"): value for key, value in values.items()}
        )


def _dispatch(argv: list[str] | None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    config = load_config(known.config)

    parser, registry = build_parser()
    _apply_config(config, registry)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.command == "tools" and getattr(args, "tools_command", None) is None:
        print("usage: agent tools {list,register} ...", file=sys.stderr)
        return 2
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_usage(sys.stderr)
        return 2
    for flag in args.required_flags:
        if getattr(args, flag, None) is None:
            name = "--" + flag.replace("_", "-").replace("in-path", "in")
            print(f"error: {name} is required", file=sys.stderr)
            return 2
    return handler(args)


def main(argv: list[str] | None = None) -> int:
    try:
        return _dispatch(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except AgentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
