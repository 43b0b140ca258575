// V3: (S+M) x̂ = M πx0 − Lump[x0ρρ];  V11: (S+Mw) x̂ = Mw πx0 − Lump[x0ρρ]
use curveflow::assembly;
use curveflow::manufactured::ManufacturedFamily;
use curveflow::mesh::{self, Partition, NodalField};
use curveflow::harness;
use curveflow::stepper::{self, CurveState};

fn solve_variant(fam: &ManufacturedFamily, j: usize, weighted: bool) -> NodalField {
    let p = Partition::uniform(j).unwrap();
    let px = mesh::interpolate(&p, 2, fam.position_at(0.0));
    let stiff = assembly::stiffness(&p);
    let mass = if weighted { assembly::weighted_mass(&px) } else { assembly::mass(&p) };
    let n = 2 * j;
    let mut rhs = vec![0.0; n];
    mass.apply(2, px.values(), &mut rhs);
    for k in 0..j {
        let s = fam.exact_state(p.node(k), 0.0);
        let e_prev = (k + j - 1) % j;
        let w = 0.5 * (p.size(e_prev) + p.size(k));
        for c in 0..2 { rhs[k * 2 + c] -= w * s.x_rhorho[c]; }
    }
    let lhs = assembly::ScalarCyclicTridiag {
        sub: stiff.sub.iter().zip(&mass.sub).map(|(a, b)| a + b).collect(),
        diag: stiff.diag.iter().zip(&mass.diag).map(|(a, b)| a + b).collect(),
        sup: stiff.sup.iter().zip(&mass.sup).map(|(a, b)| a + b).collect(),
    };
    let mut op = curveflow::linsolve::BlockCyclicTridiag::zeros(j, 1);
    for k in 0..j {
        op.sub_block_mut(k)[0] = lhs.sub[k];
        op.diag_block_mut(k)[0] = lhs.diag[k];
        op.sup_block_mut(k)[0] = lhs.sup[k];
    }
    let f = curveflow::linsolve::CyclicFactor::new(&op).unwrap();
    let mut vals = vec![0.0; n];
    let mut comp = vec![0.0; j];
    let mut sol = vec![0.0; j];
    for c in 0..2 {
        for k in 0..j { comp[k] = rhs[k * 2 + c]; }
        f.solve(&comp, &mut sol).unwrap();
        for k in 0..j { vals[k * 2 + c] = sol[k]; }
    }
    NodalField::from_values(&p, 2, vals)
}

fn table_run(fam: &ManufacturedFamily, j: usize, weighted: bool) -> harness::ErrorNorms {
    let x0 = solve_variant(fam, j, weighted);
    let mut state = CurveState::new(x0).unwrap();
    let dt = 1.0 / (j * j) as f64;
    let spec = fam.flow_spec(dt);
    let mut worst = harness::error_norms(&state, &fam);
    for _ in 0..j * j {
        state = stepper::step(&state, &spec).unwrap();
        let n = harness::error_norms(&state, &fam);
        worst = harness::ErrorNorms {
            x_l2: worst.x_l2.max(n.x_l2), x_h1: worst.x_h1.max(n.x_h1),
            y_l2: worst.y_l2.max(n.y_l2), y_h1: worst.y_h1.max(n.y_h1),
        };
    }
    worst
}

fn main() {
    let fam = ManufacturedFamily::curve_diffusion(0.1);
    for weighted in [false, true] {
        let name = if weighted { "V11 (weighted)" } else { "V3  (plain)  " };
        // initialization diff norms across levels
        let mut diffs = vec![];
        let mut ydiffs = vec![];
        for j in [32usize, 64, 128, 256] {
            let p = Partition::uniform(j).unwrap();
            let px = mesh::interpolate(&p, 2, fam.position_at(0.0));
            let hx = solve_variant(&fam, j, weighted);
            // H1 diff
            let mut l2 = 0.0; let mut semi = 0.0;
            for e in 0..j {
                let (n0, n1) = px.element_nodes(e);
                let h = p.size(e);
                let mut da = [0.0; 2]; let mut db = [0.0; 2];
                px.element_derivative(e, &mut da);
                hx.element_derivative(e, &mut db);
                semi += h * ((da[0]-db[0]).powi(2) + (da[1]-db[1]).powi(2));
                let d0 = [px.node(n0)[0]-hx.node(n0)[0], px.node(n0)[1]-hx.node(n0)[1]];
                let d1 = [px.node(n1)[0]-hx.node(n1)[0], px.node(n1)[1]-hx.node(n1)[1]];
                for c in 0..2 { l2 += h * (d0[c]*d0[c] + d0[c]*d1[c] + d1[c]*d1[c]) / 3.0; }
            }
            diffs.push((l2 + semi).sqrt());
            // y0 L2 error of initial_y(hx)
            let hy = stepper::initial_y(&hx).unwrap();
            let mut acc = 0.0;
            for e in 0..j {
                let (n0, n1) = hy.element_nodes(e);
                let h = p.size(e);
                for &(xi, wq) in &curveflow::mesh::quad::GAUSS5 {
                    let rho = p.node(e) + xi * h;
                    let exact = fam.exact_state(rho, 0.0).y;
                    for c in 0..2 {
                        let v = (1.0 - xi) * hy.node(n0)[c] + xi * hy.node(n1)[c];
                        acc += wq * h * (exact[c] - v) * (exact[c] - v);
                    }
                }
            }
            ydiffs.push(acc.sqrt());
        }
        let eocs: Vec<f64> = diffs.windows(2).map(|w| (w[0]/w[1]).log2()).collect();
        let yeocs: Vec<f64> = ydiffs.windows(2).map(|w| (w[0]/w[1]).log2()).collect();
        println!("{name}: H1 diff eocs {:.2?},  y0 L2 eocs {:.2?}", eocs, yeocs);
        let e32 = table_run(&fam, 32, weighted);
        let e64 = table_run(&fam, 64, weighted);
        println!("   J=32: x_l2={:.4e} (paper 3.5628e-3, ratio {:.2}) y_l2={:.4e} (3.9471e-3, {:.2})",
                 e32.x_l2, e32.x_l2/3.5628e-3, e32.y_l2, e32.y_l2/3.9471e-3);
        println!("   J=64: x_l2={:.4e} (paper 8.4301e-4, ratio {:.2}) y_l2={:.4e} (9.3626e-4, {:.2})",
                 e64.x_l2, e64.x_l2/8.4301e-4, e64.y_l2, e64.y_l2/9.3626e-4);
    }
}
