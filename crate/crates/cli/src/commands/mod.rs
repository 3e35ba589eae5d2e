pub mod eval;
pub mod export;
pub mod generate;
pub mod plot;
pub mod run;

use crate::cli::Command;
use crate::Outcome;

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Generate(a) => generate::execute(&a),
        Command::Run(a) => run::execute(&a),
        Command::ExportDataset(a) => export::execute(&a),
        Command::EvalCircuit(a) => eval::execute(&a),
        Command::Plotdata(a) => plot::execute(&a),
    }
}
