#![allow(dead_code)]

use formulanet::network::Layer;
use formulanet::tabular::build_design;
use formulanet::{parse_formula, Activation, DataTable, FittedModel, LossSpec, Network, NetworkConfig};
use ndarray::{Array1, Array2};

/// Unstandardized model computing `intercept + Σ slopes[j]·x_j` exactly,
/// through relu pairs `relu(x) − relu(−x)`.
pub fn linear_model(table: &DataTable, formula: &str, slopes: &[f64], intercept: f64, loss: LossSpec) -> FittedModel {
    let formula = parse_formula(formula).unwrap();
    let design = build_design(&formula, table, false).unwrap();
    let d = design.encoder.width();
    assert_eq!(d, slopes.len());
    let mut w1 = Array2::zeros((2 * d, d));
    let mut w2 = Array2::zeros((1, 2 * d));
    for (j, &s) in slopes.iter().enumerate() {
        w1[[2 * j, j]] = 1.0;
        w1[[2 * j + 1, j]] = -1.0;
        w2[[0, 2 * j]] = s;
        w2[[0, 2 * j + 1]] = -s;
    }
    let config = NetworkConfig {
        hidden: vec![2 * d],
        activation: Activation::Relu,
        bias: true,
        dropout: 0.0,
        input_dim: d,
        output_dim: 1,
    };
    let net = Network::from_layers(
        config,
        vec![
            Layer { weight: w1, bias: Some(Array1::zeros(2 * d)) },
            Layer { weight: w2, bias: Some(Array1::from_elem(1, intercept)) },
        ],
    )
    .unwrap();
    FittedModel::from_network(net, design.encoder, formula, loss, Some(table.clone())).unwrap()
}

/// `f = relu(x1) + 2·relu(x1 − 0.5) + x2` on columns `y ~ x1 + x2`.
pub fn additive_model(table: &DataTable) -> FittedModel {
    let formula = parse_formula("y ~ x1 + x2").unwrap();
    let design = build_design(&formula, table, false).unwrap();
    let w1 = ndarray::arr2(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]);
    let b1 = ndarray::arr1(&[0.0, -0.5, 0.0, 0.0]);
    let w2 = ndarray::arr2(&[[1.0, 2.0, 1.0, -1.0]]);
    let config = NetworkConfig {
        hidden: vec![4],
        activation: Activation::Relu,
        bias: true,
        dropout: 0.0,
        input_dim: 2,
        output_dim: 1,
    };
    let net = Network::from_layers(
        config,
        vec![Layer { weight: w1, bias: Some(b1) }, Layer { weight: w2, bias: Some(ndarray::arr1(&[0.0])) }],
    )
    .unwrap();
    FittedModel::from_network(net, design.encoder, formula, LossSpec::Gaussian, Some(table.clone())).unwrap()
}
