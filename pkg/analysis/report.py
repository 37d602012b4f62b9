import json


def generate_fit_text(fit, model_label=None):
    """
    Generate a human-readable threshold fit report.
    """
    lines = []
    lines.append("=== TTN-QEC Threshold Fit Report ===")
    lines.append("====================================")
    lines.append("")

    # 1. Summary
    lines.append("1. THRESHOLD")
    lines.append("-" * 20)
    if model_label:
        lines.append(f"• Noise model: {model_label}")
    lines.append(f"• Distances:   {', '.join(str(d) for d in fit.distances)}")
    lines.append(f"• tau:         {fit.tau:.5g}{_interval(fit, 'tau')}")
    lines.append(f"• nu:          {fit.nu:.4g}{_interval(fit, 'nu')}")
    lines.append("")

    # 2. Ansatz coefficients
    lines.append("2. ANSATZ COEFFICIENTS")
    lines.append("-" * 20)
    for name in ("A", "B", "C"):
        lines.append(f"• {name}: {getattr(fit, name):.5g}{_interval(fit, name)}")
    lines.append("")

    # 3. Goodness of fit
    lines.append("3. RESIDUALS")
    lines.append("-" * 20)
    lines.append(f"• Weighted chi2: {fit.chi2:.4g} over {fit.points} points")
    lines.append(f"• Restarts:      {fit.restarts}")
    for i, r in enumerate(fit.residuals):
        lines.append(f"  [{i:3d}] {r:+.3e}")
    lines.append("")

    lines.append("End of Report")
    return "\n".join(lines)


def _interval(fit, name):
    if name not in fit.intervals:
        return ""
    lo, hi = fit.intervals[name]
    return f"  (99% CI {lo:.5g} .. {hi:.5g})"


def generate_run_summary(config, table):
    """Short text summary of a finished scan."""
    lines = []
    lines.append(f"=== Run summary: {config.experiment} ===")
    lines.append("-" * 20)
    lines.append(f"• Master seed: {config.seed}")
    lines.append(f"• Cells:       {len(table)}")
    for r in table:
        lines.append(
            f"  {r.model:>18} d={r.d} C={r.C} chi={r.chi} strength={r.strength:.4g}: "
            f"{r.failures}/{r.trials} = {r.pfail:.4g} [{r.ci_lo:.3g}, {r.ci_hi:.3g}]"
        )
    return "\n".join(lines)


def save_fit_json(fit, filepath):
    with open(filepath, "w") as f:
        json.dump(fit.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return filepath


def save_report_txt(text, filepath):
    with open(filepath, 'w') as f:
        f.write(text)
    return filepath
