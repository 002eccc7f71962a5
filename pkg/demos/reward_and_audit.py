"""Score model-shaped text with the reward engine, then audit it.

Builds the ideal output for an annotated segment, shows its perfect
reward, then breaks it in three ways and watches the reward and the
rule-based audit catch each break.
"""

from peakkit.audit import (
    build_audit_bundle,
    factual_consistency_check,
    parse_with_expected,
    render_consistent_explanation,
)
from peakkit.preprocess import preprocess_segment
from peakkit.representation import extract_extrema
from peakkit.rewards import reference_output, score_output
from peakkit.segments import Modality, SynthSpec, synthesize_segment

spec = SynthSpec(modality=Modality.ECG, fs=100.0, duration_samples=1000,
                 mean_ibi_s=1.0, ibi_jitter_frac=0.03, noise_sigma=0.0,
                 rng_seed=3)
seg = preprocess_segment(synthesize_segment(spec, segment_id="demo",
                                            subject_id="subj00"))
rep = extract_extrema(seg, min_distance=1)
explanation = render_consistent_explanation(rep, seg.gt_peaks)
ideal = reference_output(seg.gt_peaks, 1, label="R", explanation=explanation)

print("ideal output text:")
print("    " + ideal.replace("\n", "\n    ")[:400])


def show(tag, raw):
    out, breakdown = score_output(raw, seg.gt_peaks, seg.fs, expected_label="R")
    print(f"\n{tag}")
    print(f"    format {breakdown.r_format:.2f}  detection {breakdown.r_detection:.2f}  "
          f"complete {breakdown.r_complete:.2f}  hr {breakdown.r_hr:.2f}  "
          f"-> total {breakdown.total:.4f}")
    report = factual_consistency_check(
        parse_with_expected(raw, seg.modality), rep, seg.gt_peaks)
    verdict = "accepted" if report.overall else "REJECTED"
    print(f"    audit: {verdict}")


show("faithful output:", ideal)

head, _, tail = ideal.partition("]")
items = head.split("[", 1)[1].split(", ")
show("dropped the last beat from the list:",
     head.split("[", 1)[0] + "[" + ", ".join(items[:-1]) + "]" + tail)

show("wrong peak label:", "Q" + ideal[1:])

show("free prose instead of the template:",
     "The rhythm looks regular with about ten beats.")

triples = [(seg, rep, ideal)]
bundle = build_audit_bundle(*zip(*triples))
print(f"\nbundle summary: {bundle.summary}")
print("write it with audit-build, then label records in the browser "
      "via `peakkit serve`.")
