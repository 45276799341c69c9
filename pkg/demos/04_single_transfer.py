"""
One transfer through the four-expert workflow
=============================================

A transfer turns a terminal environment plus its written requirement
into an executable dispatching model. Four roles cooperate: a
retriever supplies knowledge, a modeler drafts a scheme, a coder emits
the program, and a debugger reads failures and proposes a correction.

Backends are pluggable. Here a scripted one stands in for a live chat
service: the coder's first answer is missing its closing brace, the
debugger points that out, and the second attempt succeeds.
"""

from vdsagent import injection, llm
from vdsagent.instances import generate_instances
from vdsagent.knowledge import load_seed_kb
from vdsagent.solver import oracle_solve
from vdsagent.workflow import WorkflowConfig, run_transfer

# One sampled road-closure instance and the packaged seed knowledge.
env, spec = generate_instances(seed=42, kind="road_closure", count=1)[0]
kb = load_seed_kb()
print("requirement:", env.requirements.texts[0])

# The script feeds the roles in call order; the broken first program
# exercises the self-correction loop.
backend = llm.MockBackend(injection.recovery_script("road_closure"))
config = WorkflowConfig(max_iterations=3, accumulate_on_success=False)
outcome = run_transfer(env, kb, config, backend)

print(f"\nstatus: {outcome.status} after {outcome.iterations} attempt(s)")
for record in outcome.attempts:
    print(f"  attempt {record.index}: reached stage '{record.stage_reached}'"
          + (f" ({record.error})" if record.error else ""))

# The debugger's reflection has a fixed shape: a diagnosis line and a
# correction line. The correction is injected verbatim into the next
# attempt's prompts.
reflection = outcome.attempts[0].reflection
print("\ndebugger diagnosis: ", reflection.diagnosis)
print("debugger correction:", reflection.correction)

# The accepted model and its solution, checked against the exact
# oracle for the same scenario.
print("\nfinal program:")
print(outcome.final_program)
oracle = oracle_solve(env, spec)
print(f"transfer objective: {outcome.solution.objective:g}")
print(f"oracle objective:   {oracle.objective:g}")
print("match:", abs(outcome.solution.objective - oracle.objective) <= 1e-4)
