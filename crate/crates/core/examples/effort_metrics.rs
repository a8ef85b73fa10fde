//! Effort, productivity and time devoted for a single career.

use innovation_peaks::careers::{period_metrics, Career, Publication};

fn main() {
    let years = [
        2000, 2005, 2007, 2007, 2007, 2008, 2008, 2008, 2008, 2008, 2012,
    ];
    let pubs = years
        .iter()
        .enumerate()
        .map(|(i, &year)| Publication {
            paper: i as u32,
            year,
            coauthors: 2,
            score: None,
            citations: 0,
        })
        .collect();
    let c = Career::new("example", pubs).unwrap();
    for (a, b) in [(2007, 2008), (2008, 2008), (2000, 2012), (2009, 2011)] {
        match period_metrics(&c, a, b).unwrap() {
            Some(m) => println!(
                "[{a}, {b}] productivity {} time {} effort {:.3} relative effort {:.3}",
                m.productivity, m.time_devoted, m.effort, m.relative_effort
            ),
            None => println!("[{a}, {b}] nothing published"),
        }
    }
}
