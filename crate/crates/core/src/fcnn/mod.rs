//! Deep five-point stencil networks.
//!
//! Each layer maps a field `x` to `F(x) + ε(x)`, where `F` is a convolution
//! restricted to the five-point pattern (Neumann replicate padding at the
//! boundary) and `ε(x) = a₀ + a₁x + … + a_r x^r` acts elementwise. Stacking
//! `M` layers widens the receptive field to `(2M+1) × (2M+1)`.

mod format;

pub use format::{load_model, read_model, save_model, write_model, FCN1_MAGIC, FCN1_VERSION};

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::fdm::{EquationKind, EquationParams};
use crate::grid::{map_stencil, Field};
use crate::trajectory::Stepper;

/// Taps of a five-point stencil. Diagonal taps do not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilWeights {
    pub center: f64,
    pub north: f64,
    pub south: f64,
    pub east: f64,
    pub west: f64,
}

impl StencilWeights {
    pub const ZERO: StencilWeights = StencilWeights {
        center: 0.0,
        north: 0.0,
        south: 0.0,
        east: 0.0,
        west: 0.0,
    };

    /// `[center, north, south, east, west]`, the serialization order.
    pub fn to_array(self) -> [f64; 5] {
        [self.center, self.north, self.south, self.east, self.west]
    }

    pub fn from_array(w: [f64; 5]) -> Self {
        Self {
            center: w[0],
            north: w[1],
            south: w[2],
            east: w[3],
            west: w[4],
        }
    }

    /// Uniform neighbour weight `lambda` with centre `1 - 4·lambda`.
    pub fn diffusion(lambda: f64) -> Self {
        Self {
            center: 1.0 - 4.0 * lambda,
            north: lambda,
            south: lambda,
            east: lambda,
            west: lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StencilLayer {
    pub weights: StencilWeights,
    /// `a₀ … a_r`
    pub poly: Vec<f64>,
}

impl StencilLayer {
    pub fn new(weights: StencilWeights, poly: Vec<f64>) -> Result<Self> {
        let layer = Self { weights, poly };
        layer.validate()?;
        Ok(layer)
    }

    /// Pass-through layer of the given polynomial order.
    pub fn identity(order: usize) -> Self {
        Self {
            weights: StencilWeights {
                center: 1.0,
                ..StencilWeights::ZERO
            },
            poly: vec![0.0; order + 1],
        }
    }

    /// Layer reproducing one explicit finite-difference step of `eq`.
    ///
    /// The reaction term is carried by the polynomial, so `order` must be at
    /// least [`EquationKind::poly_order`].
    pub fn fdm_step(eq: &EquationParams, h: f64, dt: f64, order: usize) -> Result<Self> {
        let kind = eq.kind();
        if order < kind.poly_order() {
            return Err(domain(format!(
                "a {kind} step needs polynomial order >= {}, got {order}",
                kind.poly_order()
            )));
        }
        let lambda = dt * eq.alpha() / (h * h);
        let mut poly = vec![0.0; order + 1];
        let rate = dt * eq.beta();
        match kind {
            EquationKind::Heat => {}
            EquationKind::Fisher => {
                poly[1] = rate;
                poly[2] = -rate;
            }
            EquationKind::AllenCahn => {
                poly[1] = rate;
                poly[3] = -rate;
            }
        }
        Self::new(StencilWeights::diffusion(lambda), poly)
    }

    pub fn order(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn num_params(&self) -> usize {
        5 + self.poly.len()
    }

    fn validate(&self) -> Result<()> {
        if self.poly.is_empty() {
            return Err(Error::Validation(
                "polynomial needs at least the constant coefficient".into(),
            ));
        }
        let finite = self.weights.to_array().iter().chain(&self.poly).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("layer parameters must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    fn poly_eval(&self, x: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    #[inline]
    fn poly_derivative(&self, x: f64) -> f64 {
        self.poly
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * x + k as f64 * a)
    }
}

/// `F(x) + ε(x)` for a single layer.
pub fn layer_forward(layer: &StencilLayer, f: &Field) -> Field {
    let w = layer.weights;
    let values = map_stencil(f, |n| {
        w.center * n.center
            + w.north * n.north
            + w.south * n.south
            + w.east * n.east
            + w.west * n.west
            + layer.poly_eval(n.center)
    });
    Field::from_values(*f.spec(), values).expect("stencil output matches grid")
}

/// Ordered stack of stencil layers sharing one polynomial order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepFcnn {
    kind: EquationKind,
    layers: Vec<StencilLayer>,
}

impl DeepFcnn {
    pub fn new(kind: EquationKind, layers: Vec<StencilLayer>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::Validation("a model needs at least one layer".into()));
        };
        let order = first.order();
        for (m, layer) in layers.iter().enumerate() {
            layer.validate()?;
            if layer.order() != order {
                return Err(Error::Validation(format!(
                    "layer {m} has polynomial order {}, expected {order}",
                    layer.order()
                )));
            }
        }
        Ok(Self { kind, layers })
    }

    /// Parameters drawn i.i.d. from `U[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(
        kind: EquationKind,
        depth: usize,
        order: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let layers = (0..depth)
            .map(|_| StencilLayer {
                weights: StencilWeights::from_array(std::array::from_fn(|_| rng.gen_range(-scale..=scale))),
                poly: (0..=order).map(|_| rng.gen_range(-scale..=scale)).collect(),
            })
            .collect();
        Self::new(kind, layers)
    }

    /// `depth` copies of [`StencilLayer::fdm_step`]: exactly `depth` explicit steps of size `dt`.
    pub fn fdm_equivalent(eq: &EquationParams, h: f64, dt: f64, depth: usize, order: usize) -> Result<Self> {
        let layer = StencilLayer::fdm_step(eq, h, dt, order)?;
        Self::new(eq.kind(), vec![layer; depth])
    }

    pub fn kind(&self) -> EquationKind {
        self.kind
    }

    pub fn layers(&self) -> &[StencilLayer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn order(&self) -> usize {
        self.layers[0].order()
    }

    pub fn receptive_field(&self) -> usize {
        receptive_field(self.depth())
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(StencilLayer::num_params).sum()
    }

    /// Flat parameter vector: per layer, the five stencil taps then `a₀ … a_r`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights.to_array());
            out.extend_from_slice(&layer.poly);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(domain(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(5);
            let (p, tail) = tail.split_at(layer.poly.len());
            layer.weights = StencilWeights::from_array(w.try_into().unwrap());
            layer.poly.copy_from_slice(p);
            rest = tail;
        }
        Ok(())
    }

    pub fn predict(&self, f: &Field) -> Field {
        self.layers.iter().fold(f.clone(), |x, layer| layer_forward(layer, &x))
    }
}

/// Edge length of the square window of inputs that can influence one output
/// of a `layers`-deep stack.
pub fn receptive_field(layers: usize) -> usize {
    2 * layers + 1
}

/// Output of [`forward`] with the activations needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `inputs[m]` is the input of layer `m`; `inputs[0]` is the model input.
    pub inputs: Vec<Field>,
    pub output: Field,
}

pub fn forward(model: &DeepFcnn, f: &Field) -> ForwardPass {
    let mut inputs = Vec::with_capacity(model.depth());
    let mut x = f.clone();
    for layer in &model.layers {
        let y = layer_forward(layer, &x);
        inputs.push(x);
        x = y;
    }
    ForwardPass { inputs, output: x }
}

/// Loss gradients for one layer, laid out like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: [f64; 5],
    pub poly: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
    /// Gradient with respect to the model input.
    pub input: Field,
}

impl Gradients {
    /// Same layout as [`DeepFcnn::params`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.poly).copied())
            .collect()
    }
}

/// Reverse-mode pass through the stack given `∂loss/∂output`.
///
/// Boundary taps read replicated ghost values, so their weight gradients
/// pick up the node's own value and the input gradient is scattered back
/// onto the node the ghost copies.
pub fn backward(model: &DeepFcnn, pass: &ForwardPass, grad_output: &Field) -> Result<Gradients> {
    pass.output.check_same_dims(grad_output)?;
    if pass.inputs.len() != model.depth() {
        return Err(domain(format!(
            "forward pass has {} cached activations for a {}-layer model",
            pass.inputs.len(),
            model.depth()
        )));
    }
    let mut grad = grad_output.clone();
    let mut layers = Vec::with_capacity(model.depth());
    for (layer, x) in model.layers.iter().zip(&pass.inputs).rev() {
        let (lg, gx) = layer_backward(layer, x, &grad);
        layers.push(lg);
        grad = gx;
    }
    layers.reverse();
    Ok(Gradients { layers, input: grad })
}

fn layer_backward(layer: &StencilLayer, x: &Field, g: &Field) -> (LayerGradients, Field) {
    let (nx, ny) = x.dims();
    let xv = x.values();
    let gv = g.values();
    let w = layer.weights;
    let mut gw = [0.0; 5];
    let mut gp = vec![0.0; layer.poly.len()];
    let mut gx = vec![0.0; nx * ny];
    for i in 0..nx {
        let west = i.saturating_sub(1) * ny;
        let east = (i + 1).min(nx - 1) * ny;
        let row = i * ny;
        for j in 0..ny {
            let south = j.saturating_sub(1);
            let north = (j + 1).min(ny - 1);
            let gij = gv[row + j];
            let xc = xv[row + j];

            gw[0] += gij * xc;
            gw[1] += gij * xv[row + north];
            gw[2] += gij * xv[row + south];
            gw[3] += gij * xv[east + j];
            gw[4] += gij * xv[west + j];

            let mut pow = 1.0;
            for gk in gp.iter_mut() {
                *gk += gij * pow;
                pow *= xc;
            }

            gx[row + j] += gij * (w.center + layer.poly_derivative(xc));
            gx[row + north] += gij * w.north;
            gx[row + south] += gij * w.south;
            gx[east + j] += gij * w.east;
            gx[west + j] += gij * w.west;
        }
    }
    let gx = Field::from_values(*x.spec(), gx).expect("gradient matches grid");
    (LayerGradients { weights: gw, poly: gp }, gx)
}

/// A model advancing the solution by a fixed `dt` per application.
#[derive(Debug, Clone, Copy)]
pub struct FcnnStepper<'a> {
    pub model: &'a DeepFcnn,
    pub dt: f64,
}

impl Stepper for FcnnStepper<'_> {
    fn step(&self, f: &Field) -> Field {
        self.model.predict(f)
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdm::fdm_step;
    use crate::grid::GridSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_field(spec: GridSpec, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_index_fn(spec, |_, _| rng.gen_range(-1.0..=1.0))
    }

    fn max_rel_diff(a: &Field, b: &Field) -> f64 {
        let scale = b.max_abs().max(1e-300);
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn identity_layer() {
        let f = random_field(GridSpec::unit_square(6).unwrap(), 1);
        assert_eq!(layer_forward(&StencilLayer::identity(2), &f), f);
    }

    #[test]
    fn constant_polynomial_layer() {
        let f = random_field(GridSpec::unit_square(6).unwrap(), 2);
        let layer = StencilLayer::new(StencilWeights::ZERO, vec![0.75]).unwrap();
        assert!(layer_forward(&layer, &f).values().iter().all(|&v| v == 0.75));
    }

    #[test]
    fn heat_layer_is_one_fdm_step() {
        let spec = GridSpec::unit_square(12).unwrap();
        let eq = EquationKind::Heat.default_params();
        let layer = StencilLayer::fdm_step(&eq, spec.h(), 2e-5, 0).unwrap();
        for seed in 0..5 {
            let f = random_field(spec, seed);
            assert!(max_rel_diff(&layer_forward(&layer, &f), &fdm_step(&f, &eq, 2e-5)) < 1e-14);
        }
    }

    #[test]
    fn reaction_layers_match_fdm() {
        let spec = GridSpec::unit_square(10).unwrap();
        for kind in [EquationKind::Fisher, EquationKind::AllenCahn] {
            let eq = kind.default_params();
            let layer = StencilLayer::fdm_step(&eq, spec.h(), 2e-5, kind.poly_order()).unwrap();
            let f = random_field(spec, 9);
            assert!(max_rel_diff(&layer_forward(&layer, &f), &fdm_step(&f, &eq, 2e-5)) < 1e-13);
        }
        let ac = EquationKind::AllenCahn.default_params();
        assert!(StencilLayer::fdm_step(&ac, 0.1, 1e-3, 2).is_err());
    }

    #[test]
    fn identity_stack_and_single_layer() {
        let f = random_field(GridSpec::unit_square(7).unwrap(), 3);
        let ident = DeepFcnn::new(EquationKind::Heat, vec![StencilLayer::identity(0); 4]).unwrap();
        assert_eq!(forward(&ident, &f).output, f);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let one = DeepFcnn::random(EquationKind::Fisher, 1, 2, 0.1, &mut rng).unwrap();
        assert_eq!(forward(&one, &f).output, layer_forward(&one.layers()[0], &f));
    }

    #[test]
    fn model_validation() {
        assert!(DeepFcnn::new(EquationKind::Heat, vec![]).is_err());
        let mixed = vec![StencilLayer::identity(0), StencilLayer::identity(2)];
        assert!(DeepFcnn::new(EquationKind::Heat, mixed).is_err());
        let bad = StencilLayer {
            weights: StencilWeights {
                center: f64::NAN,
                ..StencilWeights::ZERO
            },
            poly: vec![0.0],
        };
        assert!(DeepFcnn::new(EquationKind::Heat, vec![bad]).is_err());
    }

    #[test]
    fn receptive_field_sizes() {
        assert_eq!(receptive_field(1), 3);
        assert_eq!(receptive_field(3), 7);
        assert_eq!(receptive_field(10), 21);
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = DeepFcnn::random(EquationKind::AllenCahn, 3, 3, 0.1, &mut rng).unwrap();
        let mut other = DeepFcnn::fdm_equivalent(&EquationKind::AllenCahn.default_params(), 0.01, 2e-5, 3, 3).unwrap();
        other.set_params(&model.params()).unwrap();
        assert_eq!(other, model);
        assert!(other.set_params(&[0.0; 3]).is_err());
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let spec = GridSpec::unit_square(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = DeepFcnn::random(EquationKind::AllenCahn, 3, 3, 0.5, &mut rng).unwrap();
        let pass = forward(&model, &random_field(spec, 7));
        let g = backward(&model, &pass, &Field::zeros(spec)).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
        assert!(g.input.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_coefficient_gradient() {
        // loss = ½‖out‖², so ∂loss/∂out = out and ∂loss/∂a₀ = Σ out
        let spec = GridSpec::unit_square(8).unwrap();
        let layer = StencilLayer::new(StencilWeights::ZERO, vec![0.3, -0.2, 0.4]).unwrap();
        let model = DeepFcnn::new(EquationKind::Fisher, vec![layer]).unwrap();
        let pass = forward(&model, &random_field(spec, 8));
        let g = backward(&model, &pass, &pass.output).unwrap();
        assert!((g.layers[0].poly[0] - pass.output.sum()).abs() < 1e-12);
    }

    #[test]
    fn backward_rejects_mismatched_gradient() {
        let model = DeepFcnn::new(EquationKind::Heat, vec![StencilLayer::identity(0)]).unwrap();
        let pass = forward(&model, &Field::zeros(GridSpec::unit_square(4).unwrap()));
        let err = backward(&model, &pass, &Field::zeros(GridSpec::unit_square(5).unwrap()));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
