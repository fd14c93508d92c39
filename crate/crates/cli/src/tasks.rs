use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use memdialog_client::{Client, ListOptions};
use memdialog_service::TaskStatus;

#[derive(Args)]
pub struct TasksArgs {
    /// Service base URL.
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    url: String,
    #[arg(long)]
    annotator: Option<String>,
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    List {
        #[arg(long, value_parser = |s: &str| s.parse::<TaskStatus>())]
        status: Option<TaskStatus>,
        #[arg(long)]
        offset: Option<usize>,
        #[arg(long)]
        limit: Option<usize>,
    },
    Show {
        dialog_id: String,
    },
    /// Submit paraphrases from a JSON object of turn index to text.
    Submit {
        dialog_id: String,
        #[arg(long)]
        file: PathBuf,
    },
    Report {
        dialog_id: String,
        #[arg(long)]
        reason: String,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn run(args: TasksArgs) -> Result<()> {
    let mut client = Client::new(&args.url);
    if let Some(a) = args.annotator {
        client = client.with_annotator(a);
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        match args.action {
            Action::List { status, offset, limit } => {
                let list = client.list_tasks(&ListOptions { status, offset, limit }).await?;
                for t in &list.tasks {
                    println!("{}\t{}\t{}/{}", t.dialog_id, t.status, t.paraphrased, t.turn_count);
                }
                eprintln!("{} of {} task(s)", list.tasks.len(), list.total);
            }
            Action::Show { dialog_id } => print_json(&client.get_task(&dialog_id).await?)?,
            Action::Submit { dialog_id, file } => {
                let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                let texts: BTreeMap<usize, String> =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
                print_json(&client.submit_paraphrases(&dialog_id, &texts).await?)?;
            }
            Action::Report { dialog_id, reason } => print_json(&client.report(&dialog_id, &reason).await?)?,
        }
        Ok(())
    })
}
