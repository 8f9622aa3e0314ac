//! Fit a two-component Gaussian mixture with EM.

use gmntm::gmm::{fit_em, Covariance, CovarianceMode, EmConfig, GmmParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = GmmParams::new(
        vec![0.3, 0.7],
        vec![vec![-3.0, 0.0], vec![2.0, 1.0]],
        vec![
            Covariance::Diagonal(vec![0.5, 0.5]),
            Covariance::Diagonal(vec![1.0, 0.2]),
        ],
    )?;
    let data: Vec<Vec<f64>> = (0..2000).map(|_| truth.sample(&mut rng)).collect();

    for mode in [CovarianceMode::Diagonal, CovarianceMode::Full] {
        let config = EmConfig {
            mode,
            ..EmConfig::default()
        };
        let fit = fit_em(&data, 2, &config, &mut rng)?;
        println!(
            "{}: {} iterations, converged {}, final mean log-likelihood {:.4}",
            mode.as_str(),
            fit.iterations(),
            fit.converged,
            fit.log_likelihood.last().unwrap()
        );
        for k in 0..2 {
            println!(
                "  weight {:.3} mean {:?}",
                fit.params.weight(k),
                fit.params
                    .mean(k)
                    .iter()
                    .map(|m| (m * 100.0).round() / 100.0)
                    .collect::<Vec<_>>()
            );
        }
    }
    Ok(())
}
