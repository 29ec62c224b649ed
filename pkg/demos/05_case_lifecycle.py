"""A complete shared investigation, replayed from the bundled scenario.

Organization A opens a case with B and C, dispatches the staged role
matrix, every chain logs uploads and reads per stage, the case advances by
unanimous vote (one round is blocked and re-voted), and an authorized query
node finally pulls the consolidated provenance bundle and verifies it. The
same bundle is then checked again after tampering with one off-chain store.
"""
from pathlib import Path

from forensicross import extract_provenance, load_scenario, run_scenario, verify_and_localize
from forensicross.cli import render_tamper_matrix
from forensicross.lifecycle import DEFAULT_STAGE_NAMES

scenario = load_scenario(Path(__file__).parent.parent / "scenarios" / "lifecycle_full.yaml")
world = run_scenario(scenario)

print("= stage progression =")
for event in world.events:
    if event["event"] == "stage_outcome":
        stage = event["stage"]
        name = DEFAULT_STAGE_NAMES[stage - 1] if stage <= 5 else "?"
        extra = f" reasons={event['reasons']}" if event["reasons"] else ""
        print(f"t={event['tick']:>3} stage {stage} ({name} complete): "
              f"{event['outcome']}{extra}")

case = world.registry.cases["C-100"]
print(f"\nfinal stage index: {case.current_stage} (case closed)")

print("\n= access log (first six of twenty) =")
for event in [e for e in world.events if e["event"] == "access"][:6]:
    print(f"t={event['tick']:>3} {event['chain']}: {event['actor']} "
          f"{event['op']} at stage {event['stage']} -> {event['decision']}")

print("\n= policy replication =")
for chain in ("A", "B", "C"):
    print(f"{chain}: policy digest {world.org[chain].cases['C-100'].policy.digest().hex()[:24]}…")
print(f"BRIDGE: policy digest {case.policy.digest().hex()[:24]}…")

print("\n= provenance verification (honest) =")
_tick, bundle = world.bundles[0]
report = verify_and_localize(bundle)
print(render_tamper_matrix(report, bundle.stage_count, sorted(bundle.sections)))

print("\n= provenance verification (after tampering B's stage-1 store) =")
world.stores["B"].tamper("C-100", 1, 0)
query_key = sorted(case.query_nodes)[0]
tampered_bundle = extract_provenance(world.registry, "C-100", query_key, world.stores)
tampered_report = verify_and_localize(tampered_bundle)
print(render_tamper_matrix(tampered_report, tampered_bundle.stage_count,
                           sorted(tampered_bundle.sections)))
