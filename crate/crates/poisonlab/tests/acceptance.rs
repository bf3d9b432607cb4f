//! Acceptance gate: ten criteria covering simulator gradients, the exact
//! diagonalization oracle, the closed-form minimal models, clean baselines,
//! poisoning resilience contrasts, curvature ratios, unlearning behavior,
//! exact structural identities, and capacity-sweep plumbing.
//!
//! Runs as a plain binary (harness = false) so each criterion prints its own
//! pass/fail line. Completed training cells are cached under
//! target/acceptance and reused across criteria and reruns. Stated runtime
//! bounds are printed for reference, not asserted (single-core environment).
//!
//! Usage: `cargo test --test acceptance` runs everything;
//! `cargo test --test acceptance -- 3 9` runs criteria 3 and 9 only.

use poisonlab::corruption::{apply_plan, flip_labels, CorruptionPlan, Protocol};
use poisonlab::curvature::{
    hessian_report, hessian_subset, lrr, minimal_loss, minimal_mlp_hessian, minimal_qnn_hessian,
    MinimalKind, MinimalModelPoint, HESSIAN_SUBSET_SIZE,
};
use poisonlab::dataset::{FeatureVec, LabeledDataset};
use poisonlab::experiment::{
    build_model, cell_seed, cmd_poison_train, ensure_poison_cell, load_datasets, DatasetKind,
    ExperimentConfig, ModelShape, RunContext,
};
use poisonlab::model::ModelKind;
use poisonlab::rng::Rng64;
use poisonlab::sim::{
    adjoint_gradient, parameter_shift_gradient, run_expectation, GateOp, StateVector,
};
use poisonlab::unlearning::{unlearn, UnlearnConfig, UnlearnMethod};
use poisonlab::xxz::{build_xxz_dataset, dense_ground_energy, xxz_ground_state, XxzSpec};
use std::path::PathBuf;
use std::time::Instant;

const BASE_SEED: u64 = 42;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn accept_dir() -> PathBuf {
    workspace_root().join("target/acceptance")
}

fn shared_ctx() -> RunContext {
    RunContext::new(accept_dir().join("out"), accept_dir().join("cache"), BASE_SEED)
        .expect("create acceptance dirs")
}

fn base_cfg(dataset: &str, model: &str, protocol: &str) -> ExperimentConfig {
    let mnist = workspace_root().join("data/mnist");
    ExperimentConfig {
        dataset: dataset.into(),
        model: model.into(),
        protocol: protocol.into(),
        alphas: vec![],
        seeds: vec![],
        qnn_depth: None,
        mlp_hidden: None,
        capacity_depths: vec![],
        capacity_hidden: vec![],
        epochs: None,
        batch_size: None,
        learning_rate: None,
        unlearn_steps: None,
        unlearn_learning_rate: None,
        methods: vec![],
        mnist_images: Some(mnist.join("images-idx3-ubyte.gz")),
        mnist_labels: Some(mnist.join("labels-idx1-ubyte.gz")),
        xxz_sites: None,
        mnist_train_per_class: None,
        mnist_val_total: None,
    }
}

fn shape_of(cfg: &ExperimentConfig) -> ModelShape {
    ModelShape::resolve(
        cfg.dataset_kind().unwrap(),
        cfg.model_kind().unwrap(),
        cfg.sites(),
        cfg.qnn_depth,
        cfg.mlp_hidden,
    )
}

/// Final validation accuracy of the (protocol, alpha, seed) training cell,
/// training it if no cached checkpoint exists.
fn cell_final_val(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    alpha: f64,
    seed: u64,
) -> Result<f64, String> {
    let (train, val, _) = load_datasets(cfg, ctx).map_err(|e| e.to_string())?;
    let shape = shape_of(cfg);
    let protocol = cfg.protocol().map_err(|e| e.to_string())?;
    let (record, _, _) = ensure_poison_cell(cfg, ctx, &shape, &train, &val, protocol, alpha, seed)
        .map_err(|e| e.to_string())?;
    Ok(record.final_val_accuracy)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn seed_mean(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    alpha: f64,
) -> Result<f64, String> {
    let vals: Result<Vec<f64>, String> = SEEDS
        .iter()
        .map(|&s| cell_final_val(cfg, ctx, alpha, s))
        .collect();
    Ok(mean(&vals?))
}

fn check(ok: bool, label: &str, detail: String, failures: &mut Vec<String>) {
    if !ok {
        failures.push(format!("{label}: {detail}"));
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: adjoint vs parameter-shift vs finite-difference gradients
// ---------------------------------------------------------------------------

fn random_circuit(n: usize, depth: usize, rng: &mut Rng64) -> Vec<GateOp> {
    let mut gates = Vec::new();
    for _ in 0..depth {
        for q in 0..n {
            let angle = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
            gates.push(match rng.below(3) {
                0 => GateOp::rx(q, angle),
                1 => GateOp::ry(q, angle),
                _ => GateOp::rz(q, angle),
            });
        }
        for q in 0..n.saturating_sub(1) {
            if rng.below(2) == 0 {
                gates.push(GateOp::rzz(q, q + 1, rng.uniform(-1.5, 1.5)));
            }
        }
    }
    gates
}

fn random_state(n: usize, rng: &mut Rng64) -> StateVector {
    let raw: Vec<num_complex::Complex64> = (0..1usize << n)
        .map(|_| num_complex::Complex64::new(rng.normal(), rng.normal()))
        .collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let normed: Vec<_> = raw.iter().map(|a| a / norm).collect();
    StateVector::amplitude_encode(&normed).unwrap()
}

fn criterion_1() -> Result<String, String> {
    let mut rng = Rng64::new(0xacc1);
    let mut max_as: f64 = 0.0;
    let mut max_af: f64 = 0.0;
    for trial in 0..120 {
        let n = 1 + rng.below(6);
        let depth = 1 + rng.below(4);
        let circuit = random_circuit(n, depth, &mut rng);
        let state0 = random_state(n, &mut rng);
        let readout = rng.below(n);

        let adj = adjoint_gradient(&state0, &circuit, readout).map_err(|e| e.to_string())?;
        let shift =
            parameter_shift_gradient(&state0, &circuit, readout).map_err(|e| e.to_string())?;
        let h = 1e-5;
        for k in 0..circuit.len() {
            let mut pert = circuit.to_vec();
            pert[k].angle += h;
            let ep = run_expectation(&state0, &pert, readout).map_err(|e| e.to_string())?;
            pert[k].angle -= 2.0 * h;
            let em = run_expectation(&state0, &pert, readout).map_err(|e| e.to_string())?;
            let fd = (ep - em) / (2.0 * h);
            let scale = adj[k].abs().max(1.0);
            let d_as = (adj[k] - shift[k]).abs() / scale;
            let d_af = (adj[k] - fd).abs() / scale;
            max_as = max_as.max(d_as);
            max_af = max_af.max(d_af);
            if d_as > 1e-6 || d_af > 1e-6 {
                return Err(format!(
                    "trial {trial} gate {k}: adjoint {} shift {} fd {fd}",
                    adj[k], shift[k]
                ));
            }
        }
    }
    Ok(format!(
        "120 circuits; max rel dev adjoint-shift {max_as:.2e}, adjoint-fd {max_af:.2e}"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 2: iterative diagonalization vs dense oracle, residual bounds
// ---------------------------------------------------------------------------

fn criterion_2() -> Result<String, String> {
    let mut max_dev: f64 = 0.0;
    for sites in [2usize, 3, 4, 5, 6, 7, 8] {
        for delta in [-0.5, 0.0, 1.0, 2.0] {
            let spec = XxzSpec::periodic(sites, delta);
            let gs = xxz_ground_state(&spec).map_err(|e| e.to_string())?;
            let (dense_e, _) = dense_ground_energy(&spec).map_err(|e| e.to_string())?;
            let dev = (gs.energy - dense_e).abs();
            max_dev = max_dev.max(dev);
            if dev > 1e-9 {
                return Err(format!("L={sites} Δ={delta}: {} vs dense {dense_e}", gs.energy));
            }
        }
    }
    let l4 = xxz_ground_state(&XxzSpec::periodic(4, 1.0)).map_err(|e| e.to_string())?;
    if (l4.energy + 8.0).abs() > 1e-9 {
        return Err(format!("L=4 Δ=1 energy {} != -8", l4.energy));
    }
    // the builder rejects any L=12 state with residual ≥ 1e-8
    let (train, val) = build_xxz_dataset().map_err(|e| e.to_string())?;
    Ok(format!(
        "max |iterative - dense| {max_dev:.2e}; {} + {} L=12 states under the 1e-8 residual bound",
        train.len(),
        val.len()
    ))
}

// ---------------------------------------------------------------------------
// Criterion 3: closed-form minimal-model curvature vs finite differences
// ---------------------------------------------------------------------------

/// Five-point second derivative in θ; O(h⁴) truncation keeps the comparison
/// meaningful at the 1e-8 tolerance.
fn minimal_fd(point: &MinimalModelPoint, h: f64) -> f64 {
    let at = |t: f64| minimal_loss(&MinimalModelPoint { theta: t, ..*point });
    let t = point.theta;
    (-at(t + 2.0 * h) + 16.0 * at(t + h) - 30.0 * at(t) + 16.0 * at(t - h) - at(t - 2.0 * h))
        / (12.0 * h * h)
}

fn criterion_3() -> Result<String, String> {
    let mut max_dev: f64 = 0.0;
    for ix in 0..21 {
        let x = -1.0 + 0.1 * ix as f64;
        for it in 0..21 {
            let theta = -2.0 + 0.2 * it as f64;
            for y in [0u8, 1u8] {
                let neuron = MinimalModelPoint {
                    x,
                    y,
                    theta,
                    model: MinimalKind::SingleNeuron,
                };
                let exact = minimal_mlp_hessian(&neuron).map_err(|e| e.to_string())?;
                let fd = minimal_fd(&neuron, 1e-3);
                max_dev = max_dev.max((exact - fd).abs());
                if (exact - fd).abs() > 1e-8 {
                    return Err(format!("neuron x={x} θ={theta} y={y}: {exact} vs {fd}"));
                }
                if exact < 0.0 {
                    return Err(format!("neuron curvature negative at x={x} θ={theta}"));
                }
                let qubit = MinimalModelPoint {
                    model: MinimalKind::SingleQubit,
                    ..neuron
                };
                let (_, _, exact) = minimal_qnn_hessian(&qubit).map_err(|e| e.to_string())?;
                let fd = minimal_fd(&qubit, 1e-3);
                max_dev = max_dev.max((exact - fd).abs());
                if (exact - fd).abs() > 1e-8 {
                    return Err(format!("qubit x={x} θ={theta} y={y}: {exact} vs {fd}"));
                }
            }
        }
    }
    let outlier = MinimalModelPoint {
        x: 0.0,
        y: 0,
        theta: 0.0,
        model: MinimalKind::SingleQubit,
    };
    let (_, _, total) = minimal_qnn_hessian(&outlier).map_err(|e| e.to_string())?;
    if total >= 0.0 {
        return Err(format!("expected negative curvature at the outlier, got {total}"));
    }
    Ok(format!(
        "21x21 grid x 2 labels x 2 models, max |closed-form - fd| {max_dev:.2e}; outlier curvature {total:.3}"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 4: clean training baselines
// ---------------------------------------------------------------------------

fn criterion_4(ctx: &RunContext) -> Result<String, String> {
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for (dataset, bound) in [("xxz", 0.95), ("mnist", 0.90)] {
        for model in ["mlp", "qnn"] {
            let cfg = base_cfg(dataset, model, "label_flip");
            let m = seed_mean(&cfg, ctx, 0.0)?;
            details.push(format!("{dataset}/{model} {m:.3}"));
            check(
                m >= bound,
                "clean baseline",
                format!("{dataset}/{model} mean val acc {m:.3} < {bound}"),
                &mut failures,
            );
        }
    }
    if failures.is_empty() {
        Ok(format!("mean val acc over 5 seeds: {}", details.join(", ")))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Criterion 5: label-flip resilience contrast on the spin-chain task
// ---------------------------------------------------------------------------

fn criterion_5(ctx: &RunContext) -> Result<String, String> {
    let qnn = base_cfg("xxz", "qnn", "label_flip");
    let mlp = base_cfg("xxz", "mlp", "label_flip");
    let q03 = seed_mean(&qnn, ctx, 0.3)?;
    let q07 = seed_mean(&qnn, ctx, 0.7)?;
    let m00 = seed_mean(&mlp, ctx, 0.0)?;
    let m03 = seed_mean(&mlp, ctx, 0.3)?;
    let mut failures = Vec::new();
    check(q03 >= 0.85, "qnn plateau", format!("val acc at a=0.3 is {q03:.3} < 0.85"), &mut failures);
    check(q07 <= 0.30, "qnn collapse", format!("val acc at a=0.7 is {q07:.3} > 0.30"), &mut failures);
    check(
        m03 <= m00 - 0.10,
        "mlp degradation",
        format!("val acc a=0.3 {m03:.3} not 0.10 below baseline {m00:.3}"),
        &mut failures,
    );
    if failures.is_empty() {
        Ok(format!(
            "qnn a0.3 {q03:.3}, a0.7 {q07:.3}; mlp a0 {m00:.3} -> a0.3 {m03:.3}"
        ))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: feature-randomization robustness contrast
// ---------------------------------------------------------------------------

fn criterion_6(ctx: &RunContext) -> Result<String, String> {
    // the a=0 baseline is protocol-independent; reuse the clean cells
    let q0 = seed_mean(&base_cfg("xxz", "qnn", "label_flip"), ctx, 0.0)?;
    let q08 = seed_mean(&base_cfg("xxz", "qnn", "feature_randomize"), ctx, 0.8)?;
    let m08 = seed_mean(&base_cfg("xxz", "mlp", "feature_randomize"), ctx, 0.8)?;
    let mut failures = Vec::new();
    check(
        (q08 - q0).abs() <= 0.05,
        "qnn robustness",
        format!("a=0.8 val acc {q08:.3} not within 0.05 of baseline {q0:.3}"),
        &mut failures,
    );
    check(
        m08 <= q08 - 0.05,
        "mlp contrast",
        format!("mlp a=0.8 {m08:.3} not 0.05 below qnn {q08:.3}"),
        &mut failures,
    );
    if failures.is_empty() {
        Ok(format!("qnn a0 {q0:.3} -> a0.8 {q08:.3}; mlp a0.8 {m08:.3}"))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Criterion 7: Hessian trace ratios on the image task, matched pairs
// ---------------------------------------------------------------------------

fn lrr_for(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    alpha: f64,
) -> Result<f64, String> {
    let (train, val, _) = load_datasets(cfg, ctx).map_err(|e| e.to_string())?;
    let shape = shape_of(cfg);
    let protocol = cfg.protocol().map_err(|e| e.to_string())?;
    let model = build_model(&shape);
    let seed = 1u64;
    let subset_seed = cell_seed(BASE_SEED, 0.0, seed, 0x73756273);
    let mut traces = Vec::new();
    for a in [0.0, alpha] {
        let (_, params, partition) =
            ensure_poison_cell(cfg, ctx, &shape, &train, &val, protocol, a, seed)
                .map_err(|e| e.to_string())?;
        let composite = partition.composite_train();
        let subset = hessian_subset(&composite, HESSIAN_SUBSET_SIZE, subset_seed);
        let report = hessian_report(model.as_ref(), &params, &subset, 1e-3, a, seed)
            .map_err(|e| e.to_string())?;
        traces.push(report.trace);
    }
    lrr(traces[1], traces[0]).map_err(|e| e.to_string())
}

fn criterion_7(ctx: &RunContext) -> Result<String, String> {
    let mlp = base_cfg("mnist", "mlp", "label_flip");
    let qnn = base_cfg("mnist", "qnn", "label_flip");
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for alpha in [0.2, 0.3, 0.4] {
        let rm = lrr_for(&mlp, ctx, alpha)?;
        let rq = lrr_for(&qnn, ctx, alpha)?;
        details.push(format!("a{alpha}: mlp {rm:.1}, qnn {rq:.2}"));
        check(rm >= 10.0, "mlp roughening", format!("LRR {rm:.2} < 10 at a={alpha}"), &mut failures);
        check(
            (0.2..=3.0).contains(&rq),
            "qnn stability",
            format!("LRR {rq:.2} outside [0.2, 3.0] at a={alpha}"),
            &mut failures,
        );
    }
    let self_pair = lrr(3.75, 3.75).map_err(|e| e.to_string())?;
    check(self_pair == 1.0, "self pair", format!("LRR {self_pair} != 1"), &mut failures);
    if failures.is_empty() {
        Ok(details.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Criterion 8: unlearning contrast at a=0.3 label flip, 50 steps
// ---------------------------------------------------------------------------

struct UnlearnOutcome {
    final_val: f64,
    final_forget: f64,
}

fn run_unlearn_cells(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    method: UnlearnMethod,
) -> Result<UnlearnOutcome, String> {
    let (train, val, _) = load_datasets(cfg, ctx).map_err(|e| e.to_string())?;
    let shape = shape_of(cfg);
    let model = build_model(&shape);
    let alpha = 0.3;
    let mut vals = Vec::new();
    let mut forgets = Vec::new();
    for &seed in &SEEDS {
        let (_, poisoned, partition) = ensure_poison_cell(
            cfg,
            ctx,
            &shape,
            &train,
            &val,
            Protocol::LabelFlip,
            alpha,
            seed,
        )
        .map_err(|e| e.to_string())?;
        let ucfg = UnlearnConfig::new(method, 0.01, cell_seed(BASE_SEED, alpha, seed, 0x756e6c65));
        let (_, trace) =
            unlearn(model.as_ref(), &poisoned, &partition, &val, &ucfg).map_err(|e| e.to_string())?;
        if let Some(reason) = &trace.aborted {
            return Err(format!("{method} seed {seed} aborted: {reason}"));
        }
        let last = trace.steps.last().unwrap();
        vals.push(last.val_accuracy);
        forgets.push(last.forgetting_accuracy);
    }
    Ok(UnlearnOutcome {
        final_val: mean(&vals),
        final_forget: mean(&forgets),
    })
}

fn criterion_8(ctx: &RunContext) -> Result<String, String> {
    let qnn_cfg = base_cfg("xxz", "qnn", "label_flip");
    let mlp_cfg = base_cfg("xxz", "mlp", "label_flip");
    let mut failures = Vec::new();

    let q_retrain = run_unlearn_cells(&qnn_cfg, ctx, UnlearnMethod::Retrain)?;
    let q_finetune = run_unlearn_cells(&qnn_cfg, ctx, UnlearnMethod::Finetune)?;
    check(
        q_finetune.final_forget <= 0.10,
        "qnn finetune forgetting",
        format!("forgetting acc {:.3} > 0.10", q_finetune.final_forget),
        &mut failures,
    );
    check(
        q_finetune.final_val >= q_retrain.final_val,
        "qnn finetune vs retrain",
        format!(
            "finetune val {:.3} < retrain val {:.3}",
            q_finetune.final_val, q_retrain.final_val
        ),
        &mut failures,
    );

    let m_retrain = run_unlearn_cells(&mlp_cfg, ctx, UnlearnMethod::Retrain)?;
    let mut stubborn = 0usize;
    let mut mlp_details = Vec::new();
    for method in [
        UnlearnMethod::Finetune,
        UnlearnMethod::Scrub,
        UnlearnMethod::GradAsc,
    ] {
        let o = run_unlearn_cells(&mlp_cfg, ctx, method)?;
        mlp_details.push(format!("{method} {:.3}", o.final_forget));
        if o.final_forget >= m_retrain.final_forget + 0.10 {
            stubborn += 1;
        }
    }
    check(
        stubborn >= 2,
        "mlp stubborn memory",
        format!(
            "only {stubborn} approximate methods stayed 0.10 above retrain's forgetting acc {:.3} ({})",
            m_retrain.final_forget,
            mlp_details.join(", ")
        ),
        &mut failures,
    );
    if failures.is_empty() {
        Ok(format!(
            "qnn finetune forget {:.3} / val {:.3} vs retrain val {:.3}; mlp retrain forget {:.3}, approx [{}], {stubborn} stubborn",
            q_finetune.final_forget,
            q_finetune.final_val,
            q_retrain.final_val,
            m_retrain.final_forget,
            mlp_details.join(", ")
        ))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Criterion 9: exact structural identities
// ---------------------------------------------------------------------------

fn criterion_9(ctx: &RunContext) -> Result<String, String> {
    let mut failures = Vec::new();
    let cfg = base_cfg("xxz", "mlp", "label_flip");
    let (train, val, _) = load_datasets(&cfg, ctx).map_err(|e| e.to_string())?;

    // reduction identities on a real poisoned checkpoint, 10 steps
    let shape = shape_of(&cfg);
    let model = build_model(&shape);
    let (_, poisoned, partition) = ensure_poison_cell(
        &cfg,
        ctx,
        &shape,
        &train,
        &val,
        Protocol::LabelFlip,
        0.3,
        1,
    )
    .map_err(|e| e.to_string())?;
    let mut ft = UnlearnConfig::new(UnlearnMethod::Finetune, 0.01, 77);
    ft.steps = 10;
    let (p_ft, _) =
        unlearn(model.as_ref(), &poisoned, &partition, &val, &ft).map_err(|e| e.to_string())?;
    for steps in 1..=10usize {
        let mut ga = UnlearnConfig::new(UnlearnMethod::GradAsc, 0.01, 77);
        ga.steps = steps;
        ga.beta = 0.0;
        let mut sc = UnlearnConfig::new(UnlearnMethod::Scrub, 0.01, 77);
        sc.steps = steps;
        sc.lambda_ce = 1.0;
        sc.lambda_kl = 0.0;
        sc.lambda_fo = 0.0;
        let mut ft_k = ft;
        ft_k.steps = steps;
        let (p_ref, _) = unlearn(model.as_ref(), &poisoned, &partition, &val, &ft_k)
            .map_err(|e| e.to_string())?;
        for (name, ucfg) in [("grad_asc(beta=0)", ga), ("scrub(kl=fo=0)", sc)] {
            let (p, _) = unlearn(model.as_ref(), &poisoned, &partition, &val, &ucfg)
                .map_err(|e| e.to_string())?;
            let dev = p
                .iter()
                .zip(&p_ref)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            check(
                dev <= 1e-12,
                "reduction identity",
                format!("{name} deviates {dev:.2e} from finetune at step {steps}"),
                &mut failures,
            );
        }
    }
    let _ = p_ft;

    // label-flip involution on the full set
    let plan = CorruptionPlan::new(Protocol::LabelFlip, 1.0, 5, &train).map_err(|e| e.to_string())?;
    let once = flip_labels(&train, &plan).map_err(|e| e.to_string())?;
    let twice = flip_labels(&once.forget_polluted, &plan).map_err(|e| e.to_string())?;
    check(
        twice.forget_polluted.labels == train.labels,
        "involution",
        "double flip did not restore labels".into(),
        &mut failures,
    );

    // corrupted-feature norms and partition reconstruction
    let plan = CorruptionPlan::new(Protocol::FeatureRandomize, 0.5, 11, &train)
        .map_err(|e| e.to_string())?;
    let part = apply_plan(&train, &plan).map_err(|e| e.to_string())?;
    let bad_norms = part
        .forget_polluted
        .features
        .iter()
        .filter(|f| (f.norm() - 1.0).abs() > 1e-12)
        .count();
    check(
        bad_norms == 0,
        "corrupted norms",
        format!("{bad_norms} corrupted features off unit norm"),
        &mut failures,
    );
    let composite = part.composite_train();
    let mut ids = composite.sample_ids.clone();
    ids.sort_unstable();
    let mut orig = train.sample_ids.clone();
    orig.sort_unstable();
    check(
        composite.len() == train.len() && ids == orig,
        "partition reconstruction",
        "retain + forget does not reconstruct the training set".into(),
        &mut failures,
    );
    let mask_ok = composite
        .corrupted_mask
        .iter()
        .enumerate()
        .all(|(i, &m)| m == (i >= part.retain.len()));
    check(mask_ok, "corruption mask", "mask inconsistent with partition".into(), &mut failures);

    // full-run bit determinism: identical seeds, fresh training twice
    let det_cfg = {
        let mut c = base_cfg("xxz", "mlp", "label_flip");
        c.epochs = Some(25);
        c
    };
    let run_once = || -> Result<Vec<f64>, String> {
        let shape = shape_of(&det_cfg);
        let model = build_model(&shape);
        let plan = CorruptionPlan::new(Protocol::LabelFlip, 0.3, 1234, &train)
            .map_err(|e| e.to_string())?;
        let part = apply_plan(&train, &plan).map_err(|e| e.to_string())?;
        let composite = part.composite_train();
        let tc = poisonlab::optim::TrainConfig::new(25, 32, 0.01, 999);
        let init = model.init_params(999);
        poisonlab::optim::train(model.as_ref(), init, &composite, &val, &tc)
            .map(|(p, _)| p)
            .map_err(|e| e.to_string())
    };
    let a = run_once()?;
    let b = run_once()?;
    let identical = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    check(identical, "bit determinism", "two identical runs diverged".into(), &mut failures);

    if failures.is_empty() {
        Ok("reduction identities (10 steps), involution, unit norms, partition, mask, bit determinism".into())
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Criterion 10: capacity-sweep plumbing
// ---------------------------------------------------------------------------

fn criterion_10() -> Result<String, String> {
    let mut rows = Vec::new();
    for (model, sub) in [("mlp", "c10_mlp"), ("qnn", "c10_qnn")] {
        let ctx = RunContext::new(
            accept_dir().join(sub),
            accept_dir().join("cache"),
            BASE_SEED,
        )
        .map_err(|e| e.to_string())?;
        let mut cfg = base_cfg("xxz", model, "label_flip");
        cfg.alphas = vec![0.0, 0.3];
        cfg.seeds = vec![1];
        if model == "mlp" {
            cfg.capacity_hidden = vec![[64, 16], [32, 8], [8, 2]];
        } else {
            cfg.capacity_depths = vec![5, 6, 7];
        }
        let failures = cmd_poison_train(&cfg, &ctx).map_err(|e| e.to_string())?;
        if failures > 0 {
            return Err(format!("{model} capacity sweep had {failures} failed cells"));
        }
        let text = std::fs::read_to_string(ctx.out_dir.join("capacity_summary.csv"))
            .map_err(|e| e.to_string())?;
        let n = text.lines().count() - 1;
        if n != 6 {
            return Err(format!("{model}: expected 6 summary rows, found {n}"));
        }
        rows.push(format!("{model} 6 cells"));
    }
    Ok(rows.join(", "))
}

// ---------------------------------------------------------------------------

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let selected = |n: usize| args.is_empty() || args.contains(&n);

    let ctx = shared_ctx();
    let criteria: Vec<(usize, &str, &str, Box<dyn Fn() -> Result<String, String>>)> = vec![
        (1, "simulator gradient agreement", "30 s", Box::new(criterion_1)),
        (2, "diagonalization oracle + residuals", "2 min", Box::new(criterion_2)),
        (3, "minimal-model curvature oracle", "10 s", Box::new(criterion_3)),
        (4, "clean baselines", "30 min", {
            let c = ctx.clone();
            Box::new(move || criterion_4(&c))
        }),
        (5, "label-flip resilience contrast", "1 h", {
            let c = ctx.clone();
            Box::new(move || criterion_5(&c))
        }),
        (6, "feature-randomization robustness", "1 h", {
            let c = ctx.clone();
            Box::new(move || criterion_6(&c))
        }),
        (7, "Hessian trace ratios", "30 min", {
            let c = ctx.clone();
            Box::new(move || criterion_7(&c))
        }),
        (8, "unlearning contrast", "1 h", {
            let c = ctx.clone();
            Box::new(move || criterion_8(&c))
        }),
        (9, "exact structural identities", "5 min", {
            let c = ctx.clone();
            Box::new(move || criterion_9(&c))
        }),
        (10, "capacity-sweep plumbing", "2 h", Box::new(criterion_10)),
    ];

    let mut failed = 0usize;
    let total_start = Instant::now();
    for (n, name, bound, run) in criteria {
        if !selected(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                println!("criterion {n:2} {name}: PASS ({secs:.1}s, stated bound {bound}) - {detail}");
            }
            Err(reason) => {
                failed += 1;
                println!("criterion {n:2} {name}: FAIL ({secs:.1}s, stated bound {bound}) - {reason}");
            }
        }
    }
    println!(
        "acceptance: {} ({:.1}s total)",
        if failed == 0 { "all criteria passed" } else { "FAILED" },
        total_start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

// keep unused-type warnings quiet when criteria are filtered out
#[allow(dead_code)]
fn _unused(_: &LabeledDataset, _: &FeatureVec, _: DatasetKind, _: ModelKind) {}
