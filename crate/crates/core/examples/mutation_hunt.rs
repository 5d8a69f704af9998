//! Builds each mutated microcore, runs every directed test on it and prints
//! which checkers fire.

use cheriot_core::check::{detection_matrix, directed_test};
use cheriot_core::micro::{BuildConfig, MutationId};

fn main() {
    for m in MutationId::ALL {
        let t = directed_test(m);
        println!("{m}: directed test `{}`, expected detector {}", t.name, t.detector);
        for v in t.verdicts(BuildConfig::with_mutation(m)).iter().filter(|v| !v.passed()) {
            println!("    {v}");
        }
    }

    println!("\nbuild \\ test  M1 M2 M3 M4 M5 M6");
    for (m, row) in MutationId::ALL.iter().zip(detection_matrix()) {
        let cells: Vec<&str> = row.iter().map(|&d| if d { " X" } else { " ." }).collect();
        println!("{m:<13}{}", cells.join(" "));
    }
}
