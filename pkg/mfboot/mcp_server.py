"""
MCP Server - Model Context Protocol integration for LLM interaction
"""

import os
from typing import Any, Dict, List

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from .errors import InvalidInputError, MFBootError
from .methods import CI_METHODS, PI_METHODS, MethodOptions, confidence_interval, prediction_interval
from .prediction import PredictorKind
from .simulation import PRESETS, resolve_model, simulate_pair
from .statistics import StatisticSpec
from .utils import error_msg, to_json


# Initialize server
app = Server("mfboot")


def get_jobs() -> int:
    """Parallel width for tool calls, from MFBOOT_JOBS"""
    return int(os.environ.get("MFBOOT_JOBS", "1"))


_SERIES_PROPERTIES = {
    "values": {
        "type": "array",
        "items": {"type": "number"},
        "description": "Observed series (omit to simulate from `model`)",
    },
    "model": {
        "type": "string",
        "description": "Preset (ma1, ar1, ma30 or 1-3) used when `values` is omitted",
    },
    "transfer": {
        "type": "string",
        "enum": ["asymmetric", "identity"],
        "description": "Override the model transfer (optional)",
    },
    "n": {"type": "integer", "description": "Simulated length", "default": 200},
    "data_seed": {"type": "integer", "description": "Seed for simulated data", "default": 0},
    "B": {"type": "integer", "description": "Bootstrap replicates", "default": 250},
    "alpha": {"type": "number", "description": "Nominal miscoverage", "default": 0.05},
    "seed": {"type": "integer", "description": "Bootstrap seed", "default": 0},
}


@app.list_tools()
async def list_tools() -> List[Tool]:
    """List available tools for the LLM"""
    return [
        Tool(
            name="list_models",
            description="List the built-in data-generating model presets",
            inputSchema={"type": "object", "properties": {}, "required": []},
        ),
        Tool(
            name="simulate_series",
            description="Simulate a series from a preset model (returns Y values as JSON)",
            inputSchema={
                "type": "object",
                "properties": {
                    "model": {"type": "string", "description": "Preset (ma1, ar1, ma30 or 1-3)"},
                    "transfer": _SERIES_PROPERTIES["transfer"],
                    "n": {"type": "integer", "description": "Series length"},
                    "seed": {"type": "integer", "description": "Random seed", "default": 0},
                },
                "required": ["model", "n"],
            },
        ),
        Tool(
            name="confidence_interval",
            description="Bootstrap confidence interval for a statistic of a series",
            inputSchema={
                "type": "object",
                "properties": {
                    **_SERIES_PROPERTIES,
                    "method": {"type": "string", "enum": list(CI_METHODS), "default": "mf-ker"},
                    "statistic": {
                        "type": "string",
                        "description": "mean | acov:K | acorr:K | quantile:P | spectral:OMEGA[:H]",
                        "default": "mean",
                    },
                },
                "required": [],
            },
        ),
        Tool(
            name="prediction_interval",
            description="One-step-ahead bootstrap prediction interval for a series",
            inputSchema={
                "type": "object",
                "properties": {
                    **_SERIES_PROPERTIES,
                    "method": {"type": "string", "enum": list(PI_METHODS), "default": "mf-ker"},
                    "predictor": {"type": "string", "enum": ["l2", "l1"], "default": "l2"},
                    "draws": {
                        "type": "integer", "description": "Monte Carlo draws", "default": 1000
                    },
                },
                "required": [],
            },
        ),
    ]


def _series(arguments: Dict[str, Any]):
    if "values" in arguments:
        return arguments["values"]
    if "model" not in arguments:
        raise InvalidInputError("provide either `values` or `model`")
    model = resolve_model(str(arguments["model"]), arguments.get("transfer"))
    _, y = simulate_pair(model, int(arguments.get("n", 200)), int(arguments.get("data_seed", 0)))
    return y


def _options(arguments: Dict[str, Any]) -> MethodOptions:
    return MethodOptions(
        B=int(arguments.get("B", 250)),
        alpha=float(arguments.get("alpha", 0.05)),
        seed=int(arguments.get("seed", 0)),
        n_jobs=get_jobs(),
        predictor=PredictorKind(
            str(arguments.get("predictor", "l2")).upper(), int(arguments.get("draws", 1000))
        ),
    )


@app.call_tool()
async def call_tool(name: str, arguments: Dict[str, Any]) -> List[TextContent]:
    """Handle tool calls from the LLM"""
    try:
        if name == "list_models":
            output = f"Found {len(PRESETS)} models:\n\n"
            for label, spec in PRESETS.items():
                output += f"• {label}: AR {list(spec.ar)} | MA order {len(spec.ma)}"
                output += f" | transfer {spec.transfer}\n"
            return [TextContent(type="text", text=output)]

        elif name == "simulate_series":
            model = resolve_model(str(arguments["model"]), arguments.get("transfer"))
            _, y = simulate_pair(model, int(arguments["n"]), int(arguments.get("seed", 0)))
            return [TextContent(type="text", text=to_json({"model": model.label, "Y": y.tolist()}))]

        elif name == "confidence_interval":
            spec = StatisticSpec.parse(str(arguments.get("statistic", "mean")))
            interval = confidence_interval(
                str(arguments.get("method", "mf-ker")),
                _series(arguments),
                spec,
                _options(arguments),
            )
            return [TextContent(type="text", text=to_json(interval.to_dict()))]

        elif name == "prediction_interval":
            interval = prediction_interval(
                str(arguments.get("method", "mf-ker")), _series(arguments), _options(arguments)
            )
            return [TextContent(type="text", text=to_json(interval.to_dict()))]

        else:
            return [TextContent(type="text", text=f"Unknown tool: {name}")]

    except MFBootError as e:
        return [TextContent(type="text", text=error_msg(e))]
    except Exception as e:
        return [TextContent(type="text", text=f"Error executing {name}: {str(e)}")]


async def run_server():
    """Run the MCP server"""
    async with stdio_server() as (read_stream, write_stream):
        await app.run(read_stream, write_stream, app.create_initialization_options())


def main():
    """Main entry point for MCP server"""
    import asyncio

    asyncio.run(run_server())


if __name__ == "__main__":
    main()
