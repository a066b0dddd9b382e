use lubrix_core::domain::GapProfile;
use lubrix_core::eos::PressureLaw;
use lubrix_core::reynolds::*;

fn cosine_problem() -> ReynoldsProblem {
    let gap = GapProfile::cosine(1.0, vec![0.5]).unwrap();
    ReynoldsProblem::new(gap, 1.0, 1.0, 0.4, PressureLaw::hard_sphere()).unwrap()
}

#[test]
fn first_integral_holds_on_fine_grid() {
    let p = cosine_problem();
    let t = std::time::Instant::now();
    let sol = solve_reynolds(&p, 1024, &ShootingOptions::default()).unwrap();
    println!("shooting {:?} lambda {} fi {:e} mass {:e}", t.elapsed(), sol.lambda_flux, sol.residuals.first_integral, sol.residuals.mass);
    assert!(sol.residuals.first_integral < 1e-6);
}

#[test]
fn fv_converges_to_shooting() {
    let p = cosine_problem();
    let t = std::time::Instant::now();
    let sh = solve_reynolds(&p, 512, &ShootingOptions::default()).unwrap();
    let fvs: Vec<_> = [128, 256, 512].iter().map(|&n| fv_solve(&p, n, &FvOptions::default()).unwrap()).collect();
    let d = sh.rho.iter().zip(&fvs[2].rho).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let order = observed_order(fvs[0].lambda_flux, fvs[1].lambda_flux, fvs[2].lambda_flux);
    println!("{:?} diff {d:e} order {order} lam {} {} {} sh {}", t.elapsed(), fvs[0].lambda_flux, fvs[1].lambda_flux, fvs[2].lambda_flux, sh.lambda_flux);
    assert!(d < 1e-4);
    assert!(order >= 1.8);
}

#[test]
fn dilute_and_fast_films_match_fv() {
    let gap = GapProfile::cosine(1.0, vec![0.5]).unwrap();
    for (s, mass) in [(1.0, 0.05), (4.0, 0.4)] {
        let p = ReynoldsProblem::new(gap.clone(), 1.0, s, mass, PressureLaw::hard_sphere()).unwrap();
        let sh = solve_reynolds(&p, 256, &ShootingOptions::default()).unwrap();
        assert_eq!(sh.direction, Direction::Backward, "s {s}, M {mass}");
        let fv = fv_solve(&p, 256, &FvOptions::default()).unwrap();
        let d = sh.rho.iter().zip(&fv.rho).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-4, "s {s}, M {mass}: {d:e}");
        assert!(sh.residuals.first_integral < 1e-6);
    }
}

#[test]
fn mass_map_is_monotone_across_orientations() {
    let p = cosine_problem();
    let lim = p.lambda_limit().unwrap();
    let opts = ShootingOptions::default();
    let mut last = 0.0;
    for k in 1..24 {
        let lam = lim * k as f64 / 24.0;
        let orbit = shoot_periodic(&p, lam, &opts).unwrap();
        let path = integrate_period_in(&p, lam, orbit.rho0, &[], &opts.ode, orbit.direction).unwrap();
        assert!(path.mass > last, "lambda {lam}: {} after {last}", path.mass);
        last = path.mass;
    }
}
