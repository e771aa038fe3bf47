"""Bridge to external MaxSAT / ILP solver executables.

The command template gets ``{input}`` (and optionally ``{output}``)
substituted, e.g. ``"maxsat-solver {input}"`` or
``"ilpsolve {input} -o {output}"``.  MaxSAT models are read from DIMACS
``v`` lines (either space-separated literals or a 0/1 string); ILP
solutions from ``name value`` lines (Gurobi .sol style).  Without an
``{output}`` placeholder, stdout is parsed.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile

from .errors import ConfigError, InfeasibleError, SolveTimeout
from .encode import export_lp, export_wcnf


class SolverBridge:
    def __init__(self, cmd_template, timeout=600.0):
        if "{input}" not in cmd_template:
            raise ConfigError("solver command template must contain {input}")
        self.cmd_template = cmd_template
        self.timeout = timeout

    def _run(self, write_instance, suffix):
        with tempfile.TemporaryDirectory(prefix="cidesign-") as tmp:
            in_path = os.path.join(tmp, "instance" + suffix)
            out_path = os.path.join(tmp, "solution.txt")
            with open(in_path, "w", encoding="utf-8") as fh:
                write_instance(fh)
            cmd = self.cmd_template.replace("{input}", shlex.quote(in_path)).replace(
                "{output}", shlex.quote(out_path)
            )
            try:
                proc = subprocess.run(
                    cmd,
                    shell=True,
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired as exc:
                raise SolveTimeout(f"solver exceeded {self.timeout}s") from exc
            except OSError as exc:
                raise ConfigError(f"failed to run solver: {exc}") from exc
            if "{output}" in self.cmd_template and os.path.exists(out_path):
                with open(out_path, "r", encoding="utf-8") as fh:
                    return fh.read(), proc
            return proc.stdout, proc

    def solve_wcnf(self, wcnf, varmap=None):
        """Model dict var->bool parsed from the solver's v lines."""
        text, proc = self._run(lambda fh: export_wcnf(wcnf, fh, varmap), ".wcnf")
        status = None
        lits = []
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("s "):
                status = line[2:].strip().upper()
            elif line.startswith("v "):
                payload = line[2:].split()
                if len(payload) == 1 and set(payload[0]) <= {"0", "1"}:
                    bits = payload[0]
                    lits.extend(
                        (i + 1) if b == "1" else -(i + 1) for i, b in enumerate(bits)
                    )
                else:
                    lits.extend(int(t) for t in payload if int(t) != 0)
        if status is not None and "UNSAT" in status:
            raise InfeasibleError("external solver reported UNSATISFIABLE")
        if not lits:
            raise ConfigError(
                f"no v-line model in solver output (exit {proc.returncode})"
            )
        model = {}
        for lit in lits:
            model[abs(lit)] = lit > 0
        return model

    def solve_lp(self, ilp):
        """Variable assignment dict parsed from 'name value' lines."""
        text, proc = self._run(lambda fh: export_lp(ilp, fh), ".lp")
        values = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("s "):
                continue
            parts = line.split()
            if len(parts) == 2:
                name, val = parts
                try:
                    values[name] = int(round(float(val)))
                except ValueError:
                    continue
        if not values:
            raise ConfigError(
                f"no variable assignments in solver output (exit {proc.returncode})"
            )
        return values
