#!/usr/bin/env python3
"""
Integration validation script for the charflow command pipelines
Validates that every subcommand pipeline can be imported, has the expected signature
and is dispatched by the CLI
"""

import sys
import inspect
from pathlib import Path

# Add lib/python to path so we can import the charflow package
sys.path.insert(0, str(Path(__file__).parent.parent / "lib" / "python"))

PIPELINES = [
    ('hamiltonian', 'cmd_hamiltonian'),
    ('characteristics', 'cmd_characteristics'),
    ('hjb', 'cmd_hjb'),
    ('cost', 'cmd_cost'),
    ('transport', 'cmd_transport'),
    ('validate', 'cmd_validate'),
]


def validate_imports():
    """Verify all pipeline functions can be imported"""
    print("\n✓ Checking pipeline imports...")
    try:
        from charflow import workflow
        for _, func_name in PIPELINES:
            getattr(workflow, func_name)
        print("  ✅ All pipeline functions imported successfully")
        return True
    except (ImportError, AttributeError) as e:
        print(f"  ❌ Import failed: {e}")
        return False


def validate_signatures():
    """Verify every pipeline takes a spec first and accepts a logger"""
    print("\n✓ Checking pipeline function signatures...")

    from charflow import workflow

    all_ok = True
    for command, func_name in PIPELINES:
        params = list(inspect.signature(getattr(workflow, func_name)).parameters)
        if params and params[0] == 'spec' and 'logger' in params:
            print(f"  ✅ {command:16} pipeline signature OK")
        else:
            print(f"  ❌ {command:16} pipeline params: {params}")
            all_ok = False

    return all_ok


def validate_cli_dispatch():
    """Verify each subcommand is registered and delegates to its pipeline"""
    print("\n✓ Checking CLI dispatch...")

    from charflow import cli

    parser = cli.build_parser()
    source = inspect.getsource(cli.run)
    all_ok = True
    for command, func_name in PIPELINES:
        try:
            parser.parse_args([command, '--spec', 'problem.yaml'] + (['--x', '0', '--p', '0'] if command == 'hamiltonian' else []))
        except SystemExit:
            print(f"  ❌ {command:16} NOT registered")
            all_ok = False
            continue
        if func_name in source:
            print(f"  ✅ {command:16} delegates to {func_name}")
        else:
            print(f"  ❌ {command:16} does NOT delegate to {func_name}")
            all_ok = False

    return all_ok


def validate_exports():
    """Verify the solver subpackages export their public operations"""
    print("\n✓ Checking module exports...")

    import importlib

    expected_exports = {
        'charflow.problem': ['hamiltonian', 'check_assumptions'],
        'charflow.characteristics': ['build_flow_map', 'reconstruct_solution'],
        'charflow.hjb': ['solve_hjb', 'hopf_lax_oracle', 'viscosity_residual'],
        'charflow.cost': ['cost_shooting', 'cost_transcription', 'cost_dp_oracle', 'cost_matrix'],
        'charflow.transport': ['solve_mk', 'dual_potentials', 'monge_map'],
    }

    all_ok = True
    for module_name, names in expected_exports.items():
        module = importlib.import_module(module_name)
        for export_name in names:
            label = f"{module_name}.{export_name}"
            if export_name in getattr(module, '__all__', []):
                print(f"  ✅ {label:45} exported")
            else:
                print(f"  ❌ {label:45} NOT exported")
                all_ok = False

    return all_ok


def main():
    """Run all validations"""
    print("\n" + "="*70)
    print("  CHARFLOW PIPELINE VALIDATION")
    print("="*70)

    results = []

    try:
        results.append(("Imports", validate_imports()))
        results.append(("Function Signatures", validate_signatures()))
        results.append(("CLI Dispatch", validate_cli_dispatch()))
        results.append(("Module Exports", validate_exports()))
    except Exception as e:
        print(f"\n❌ Validation error: {e}")
        import traceback
        traceback.print_exc()
        return 1

    # Summary
    print("\n" + "="*70)
    print("  VALIDATION SUMMARY")
    print("="*70)

    for check_name, passed in results:
        status = "✅ PASS" if passed else "❌ FAIL"
        print(f"{status}  {check_name}")

    all_passed = all(result[1] for result in results)

    print("\n" + "="*70)
    if all_passed:
        print("🎉 ALL VALIDATIONS PASSED!")
        print("="*70)
        return 0
    else:
        print("⚠️  SOME VALIDATIONS FAILED")
        print("="*70)
        return 1


if __name__ == '__main__':
    sys.exit(main())
