//! Synchronous request handlers; the HTTP layer runs these on the blocking
//! pool.

use std::time::Instant;

use base64::Engine as _;
use ccb_api::*;
use ccb_core::{
    brute_force_min, degree_spread, hierarchical_segment, irrq_solve, multiway_segment,
    BalanceWeights, CostKind, Error, IrrqConfig, PartitionK, Result, SplitOrder,
};

pub fn partition(req: &PartitionRequest) -> Result<PartitionResponse> {
    let start = Instant::now();
    let g = req.graph.to_graph()?;
    req.cost.validate()?;
    req.config.validate()?;
    let k = req.config.k;
    let (part, iterations) = match req.method {
        PartitionMethod::Brute => (brute_force_min(&g, req.cost, k)?.0, 0),
        method => {
            let CostKind::Ccb { tau, mode } = req.cost else {
                return Err(Error::Config(
                    "multiway and hierarchical partitioning minimize the ccb cost; use brute for cut or bh".into(),
                ));
            };
            let cfg = IrrqConfig {
                tau,
                ..req.config.clone()
            };
            let seg = if method == PartitionMethod::Multiway {
                let w = BalanceWeights::for_graph(&g, mode)?;
                multiway_segment(&g, &cfg, &w, cfg.seed)?
            } else {
                hierarchical_segment(&g, &cfg, mode, SplitOrder::Cost)?.segmentation
            };
            (seg.partition, seg.iterations)
        }
    };
    let cost = req.cost.evaluate(&g, &part)?;
    Ok(PartitionResponse {
        k: part.k(),
        labels: part.into_labels(),
        cost,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn sweep(req: &SweepRequest) -> Result<SweepResponse> {
    Ok(SweepResponse {
        rows: ccb_core::bifurcation_sweep(&req.alphas, &req.params, req.family)?,
    })
}

pub fn embed(req: &EmbedRequest) -> Result<EmbedResponse> {
    let g = req.graph.to_graph()?;
    let w = BalanceWeights::for_graph(&g, req.mode)?;
    let res = irrq_solve(&g, &req.config, &w)?;
    let y = &res.embedding;
    Ok(EmbedResponse {
        rows: (0..y.n()).map(|i| y.row(i)).collect(),
        trace: res.trace,
        stop: res.stop,
        theta_hat: res.theta_hat,
        kappa: res.kappa,
        floored_gammas: res.floored_gammas,
    })
}

pub fn cost(req: &CostRequest) -> Result<CostResponse> {
    let g = req.graph.to_graph()?;
    let part = PartitionK::relabel(&req.labels)?;
    Ok(CostResponse {
        value: req.cost.evaluate(&g, &part)?,
    })
}

pub fn segment(req: &SegmentRequest) -> Result<SegmentResponse> {
    let start = Instant::now();
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(req.image_base64.as_bytes())
        .map_err(|e| Error::Image(format!("bad base64: {e}")))?;
    let img = image::load_from_memory(&bytes)?.to_rgb8();
    let seg = ccb_core::segment_image(
        &img,
        &req.affinity,
        &req.config,
        req.method.into(),
        req.mode,
    )?;
    let spread = degree_spread(&seg.graph, &seg.segmentation.partition)?;
    Ok(SegmentResponse {
        width: seg.labels.width,
        height: seg.labels.height,
        labels: seg.labels.labels,
        sigma: seg.sigma,
        iterations: seg.segmentation.iterations,
        degree_spread: spread,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn eval(req: &EvalRequest) -> Result<EvalResponse> {
    let seg = PartitionK::relabel(&req.segmentation)?;
    let gts = req
        .ground_truths
        .iter()
        .map(|g| PartitionK::relabel(g))
        .collect::<Result<Vec<_>>>()?;
    ccb_core::eval::evaluate(&seg, &gts)
}
