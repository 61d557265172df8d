use base64::Engine as _;
use ccb_api::*;
use ccb_client::{Client, ClientError, ErrorKind};
use ccb_core::{
    barbell, brute_force_min, classify_toy, toy_graph, BalanceMode, CostKind, IrrqConfig,
    PartitionK, SweepFamily, ToyClass,
};
use ccb_server::{spawn_local, ServerConfig};

async fn client() -> Client {
    Client::new(spawn_local(ServerConfig::default()).await.unwrap())
}

fn ccb(tau: f64, mode: BalanceMode) -> CostKind {
    CostKind::Ccb { tau, mode }
}

#[tokio::test]
async fn health_and_version() {
    let c = client().await;
    c.health().await.unwrap();
    let v = c.version().await.unwrap();
    assert_eq!(v, VersionResponse::current());
    assert_eq!(v.tau_domain, "(0, 2]");
}

#[tokio::test]
async fn brute_toy_quadratic_is_balanced() {
    let c = client().await;
    let req = PartitionRequest {
        graph: GraphSpec::from(&toy_graph(0.3).unwrap()),
        cost: ccb(2.0, BalanceMode::Normalized),
        method: PartitionMethod::Brute,
        config: IrrqConfig {
            k: 2,
            ..Default::default()
        },
    };
    let resp = c.partition(&req).await.unwrap();
    assert_eq!(classify_toy(&resp.partition().unwrap()), ToyClass::Balanced);
}

#[tokio::test]
async fn multiway_matches_brute_on_barbell() {
    let c = client().await;
    let g = barbell(4, 0.1).unwrap();
    let cost = ccb(1.0, BalanceMode::Normalized);
    let (_, best) = brute_force_min(&g, cost, 2).unwrap();
    for method in [PartitionMethod::Multiway, PartitionMethod::Hierarchical] {
        let req = PartitionRequest {
            graph: GraphSpec::from(&g),
            cost,
            method,
            config: IrrqConfig {
                k: 2,
                ..Default::default()
            },
        };
        let resp = c.partition(&req).await.unwrap();
        assert!(
            (resp.cost - best).abs() <= 1e-9,
            "{method:?}: {} vs {best}",
            resp.cost
        );
        assert!(resp.iterations > 0);
    }
}

#[tokio::test]
async fn errors_carry_kind_and_status() {
    let c = client().await;
    let req = PartitionRequest {
        graph: GraphSpec::from(&barbell(3, 0.1).unwrap()),
        cost: CostKind::Cut,
        method: PartitionMethod::Multiway,
        config: IrrqConfig {
            k: 2,
            ..Default::default()
        },
    };
    match c.partition(&req).await {
        Err(ClientError::Api { status, body }) => {
            assert_eq!((status, body.kind), (422, ErrorKind::Config));
        }
        other => panic!("{other:?}"),
    }
    let bad_graph = CostRequest {
        graph: GraphSpec {
            n: 2,
            edges: vec![(0, 0, 1.0)],
        },
        labels: vec![0, 1],
        cost: CostKind::Cut,
    };
    assert_eq!(
        c.cost(&bad_graph).await.unwrap_err().kind(),
        ErrorKind::Config
    );

    let http = reqwest::Client::new();
    let resp = http
        .post(format!("{}/v1/partition", c.base_url()))
        .header("content-type", "application/json")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let body: ErrorBody = resp.json().await.unwrap();
    assert_eq!(body.kind, ErrorKind::Config);

    let resp = http
        .post(format!("{}/v1/sweep", c.base_url()))
        .json(&serde_json::json!({"alphas": [0.5], "params": [1.0], "family": {"ccb": "ratio"}, "extra": 1}))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
}

#[tokio::test]
async fn sweep_covers_every_cell() {
    let c = client().await;
    let req = SweepRequest {
        alphas: vec![0.2, 0.8],
        params: vec![0.5, 1.0, 2.0],
        family: SweepFamily::Ccb(BalanceMode::Ratio),
    };
    let rows = c.sweep(&req).await.unwrap().rows;
    assert_eq!(
        rows,
        ccb_core::bifurcation_sweep(&req.alphas, &req.params, req.family).unwrap()
    );
    let empty = SweepRequest {
        alphas: vec![],
        ..req
    };
    assert_eq!(c.sweep(&empty).await.unwrap_err().kind(), ErrorKind::Config);
}

#[tokio::test]
async fn embed_and_cost_agree_with_core() {
    let c = client().await;
    let g = barbell(4, 0.2).unwrap();
    let cfg = IrrqConfig {
        tau: 1.0,
        k: 1,
        ..Default::default()
    };
    let resp = c
        .embed(&EmbedRequest {
            graph: GraphSpec::from(&g),
            mode: BalanceMode::Normalized,
            config: cfg.clone(),
        })
        .await
        .unwrap();
    let w = ccb_core::BalanceWeights::for_graph(&g, BalanceMode::Normalized).unwrap();
    let local = ccb_core::irrq_solve(&g, &cfg, &w).unwrap();
    assert_eq!(resp.trace, local.trace);
    assert_eq!(resp.rows.len(), 8);
    for (i, row) in resp.rows.iter().enumerate() {
        assert_eq!(row, &local.embedding.row(i));
    }

    let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let kind = ccb(1.5, BalanceMode::Ratio);
    let value = c
        .cost(&CostRequest {
            graph: GraphSpec::from(&g),
            labels: labels.clone(),
            cost: kind,
        })
        .await
        .unwrap()
        .value;
    assert_eq!(
        value,
        kind.evaluate(&g, &PartitionK::new(labels, 2).unwrap())
            .unwrap()
    );
}

fn png_base64(img: &image::RgbImage) -> String {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png).unwrap();
    base64::engine::general_purpose::STANDARD.encode(buf.into_inner())
}

#[tokio::test]
async fn segment_and_eval_stripes() {
    let c = client().await;
    let (img, gt) = ccb_core::synthetic::three_stripes(24, 1).unwrap();
    let req = SegmentRequest {
        image_base64: png_base64(&img),
        method: ImageMethod::Multiway,
        mode: BalanceMode::Normalized,
        affinity: AffinityParams {
            radius: 3.0,
            ..Default::default()
        },
        config: IrrqConfig {
            tau: 1.0,
            k: 3,
            ..Default::default()
        },
    };
    let seg = c.segment(&req).await.unwrap();
    assert_eq!((seg.width, seg.height, seg.labels.len()), (24, 24, 576));
    let m = c
        .eval(&EvalRequest {
            segmentation: seg.labels.iter().map(|&l| l as usize).collect(),
            ground_truths: vec![gt.labels().to_vec()],
        })
        .await
        .unwrap();
    assert_eq!((m.covering, m.pri, m.voi), (1.0, 1.0, 0.0));

    let again = c.segment(&req).await.unwrap();
    assert_eq!(again.labels, seg.labels);

    let garbage = SegmentRequest {
        image_base64: "@@@".into(),
        ..req.clone()
    };
    match c.segment(&garbage).await {
        Err(ClientError::Api { status, body }) => {
            assert_eq!((status, body.kind), (400, ErrorKind::Io))
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn eval_rejects_mismatch_and_empty() {
    let c = client().await;
    let mismatch = EvalRequest {
        segmentation: vec![0, 1, 1],
        ground_truths: vec![vec![0, 1]],
    };
    assert_eq!(
        c.eval(&mismatch).await.unwrap_err().kind(),
        ErrorKind::Config
    );
    let none = EvalRequest {
        segmentation: vec![0, 1],
        ground_truths: vec![],
    };
    assert_eq!(c.eval(&none).await.unwrap_err().kind(), ErrorKind::Config);
    // gaps in label values are renumbered
    let gappy = EvalRequest {
        segmentation: vec![0, 0, 1, 1],
        ground_truths: vec![vec![7, 3, 3, 3]],
    };
    assert_eq!(c.eval(&gappy).await.unwrap().covering, 5.0 / 8.0);
}

#[tokio::test]
async fn queued_requests_all_finish() {
    let base = spawn_local(ServerConfig {
        max_concurrent: 1,
        ..Default::default()
    })
    .await
    .unwrap();
    let c = Client::new(base);
    let req = PartitionRequest {
        graph: GraphSpec::from(&barbell(5, 0.1).unwrap()),
        cost: ccb(0.8, BalanceMode::Ratio),
        method: PartitionMethod::Multiway,
        config: IrrqConfig {
            k: 2,
            ..Default::default()
        },
    };
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let (c, req) = (c.clone(), req.clone());
            tokio::spawn(async move { c.partition(&req).await.unwrap().labels })
        })
        .collect();
    let mut outs = Vec::new();
    for t in tasks {
        outs.push(t.await.unwrap());
    }
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
}
