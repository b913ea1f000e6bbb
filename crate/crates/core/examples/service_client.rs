//! Talk to an inference service over HTTP.
//!
//! Set INQPIPE_ENDPOINT to a running service. Without it, the example starts
//! a toy in-process server that answers every endpoint with fixed values.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use inqpipe::corpus::DecodeParams;
use inqpipe::modelio::{GenerationRequest, HttpBackend, HttpConfig, ModelBackend, PreferenceRequest};

fn toy_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream);
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).is_err() {
                continue;
            }
            let mut length = 0;
            loop {
                let mut header = String::new();
                reader.read_line(&mut header).ok();
                if header.trim().is_empty() {
                    break;
                }
                if let Some((k, v)) = header.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).ok();
            let reply = match request_line.split_whitespace().nth(1).unwrap_or("") {
                "/generate" => r#"{"question":"Why is the plan under review now?","token_count":8}"#,
                "/classify" => r#"{"distribution":[0.05,0.05,0.1,0.7,0.05,0.05,0.0]}"#,
                "/prefer" | "/inquisitive" => r#"{"probability":0.8}"#,
                "/score_tokens" => r#"{"logprobs":[-1.2,-0.4,-2.3]}"#,
                _ => "{}",
            };
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    format!("http://{addr}")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = match HttpConfig::from_env() {
        Some(c) => c,
        None => {
            println!("INQPIPE_ENDPOINT not set; using a toy local server");
            HttpConfig::new(toy_server())
        }
    };
    println!("endpoint: {}", config.base_url);
    let client = HttpBackend::new(config);

    let generated = client.generate(&GenerationRequest {
        input: "NO_CONTEXT [SEP] The plan is under review. [SEP] review [SEP] Explanation".into(),
        params: DecodeParams::default(),
        seed: Some(1),
    })?;
    println!("generate -> {:?} ({} tokens)", generated.question, generated.token_count);
    println!("classify -> {}", client.classify_type(&generated.question)?.argmax());
    let p = client.prefer(&PreferenceRequest::new("The plan is under review.", "Why?", "What plan?"))?;
    println!("prefer   -> {p}");
    println!("score    -> {:?}", client.score_tokens(&generated.question)?);
    Ok(())
}
