//! The broker as a TCP service. Connections are read concurrently; their
//! frames are linearized into a single queue that one task applies to the
//! broker.

use std::collections::HashMap;
use std::future::Future;

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tracing::{debug, info, warn};

use super::broker::Broker;
use super::frame::{Frame, FrameBuffer, MsgType};
use super::BusError;

enum Inbound {
    Frame(u64, Frame),
    Closed(u64),
}

fn error_frame(message: &str) -> Frame {
    Frame::new(MsgType::Error, serde_json::json!({ "error": message }).to_string())
}

async fn read_loop(
    id: u64,
    mut reader: tokio::net::tcp::OwnedReadHalf,
    tx: mpsc::UnboundedSender<Inbound>,
    out: mpsc::UnboundedSender<Frame>,
) {
    let mut buf = FrameBuffer::new();
    let mut chunk = vec![0u8; 64 * 1024];
    loop {
        let n = match reader.read(&mut chunk).await {
            Ok(0) | Err(_) => break,
            Ok(n) => n,
        };
        buf.extend(&chunk[..n]);
        loop {
            match buf.next_frame() {
                Ok(Some(frame)) => {
                    if tx.send(Inbound::Frame(id, frame)).is_err() {
                        return;
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    warn!(connection = id, error = %e, "closing connection on a malformed frame");
                    let _ = out.send(error_frame(&e.to_string()));
                    let _ = tx.send(Inbound::Closed(id));
                    return;
                }
            }
        }
    }
    let _ = tx.send(Inbound::Closed(id));
}

async fn write_loop(mut writer: tokio::net::tcp::OwnedWriteHalf, mut rx: mpsc::UnboundedReceiver<Frame>) {
    while let Some(frame) = rx.recv().await {
        let Ok(bytes) = frame.encode() else { continue };
        if writer.write_all(&bytes).await.is_err() {
            break;
        }
    }
}

struct Connections {
    writers: HashMap<u64, mpsc::UnboundedSender<Frame>>,
    agent_of: HashMap<u64, String>,
}

impl Connections {
    fn send_to_agent(&self, agent: &str, frame: Frame) {
        match self.agent_of.iter().find(|(_, a)| a.as_str() == agent) {
            Some((conn, _)) => {
                let _ = self.writers[conn].send(frame);
            }
            None => debug!(agent, "no connection for agent; frame dropped"),
        }
    }
}

/// Serves `broker` on `listener` until `shutdown` resolves, then returns
/// the broker with everything it logged.
pub async fn serve(
    listener: TcpListener,
    mut broker: Broker,
    shutdown: impl Future<Output = ()>,
) -> Result<Broker, BusError> {
    let (tx, mut rx) = mpsc::unbounded_channel::<Inbound>();
    let mut conns = Connections {
        writers: HashMap::new(),
        agent_of: HashMap::new(),
    };
    let mut next_id = 0u64;
    tokio::pin!(shutdown);
    info!(addr = %listener.local_addr().map_err(|e| BusError::Io(e.to_string()))?, "broker listening");
    loop {
        tokio::select! {
            _ = &mut shutdown => {
                info!("shutting down");
                return Ok(broker);
            }
            accepted = listener.accept() => {
                let (stream, peer): (TcpStream, _) = accepted.map_err(|e| BusError::Io(e.to_string()))?;
                let id = next_id;
                next_id += 1;
                debug!(connection = id, %peer, "accepted");
                let (reader, writer) = stream.into_split();
                let (out_tx, out_rx) = mpsc::unbounded_channel();
                conns.writers.insert(id, out_tx.clone());
                tokio::spawn(read_loop(id, reader, tx.clone(), out_tx));
                tokio::spawn(write_loop(writer, out_rx));
            }
            Some(inbound) = rx.recv() => match inbound {
                Inbound::Closed(id) => {
                    conns.writers.remove(&id);
                    conns.agent_of.remove(&id);
                    debug!(connection = id, "closed");
                }
                Inbound::Frame(id, frame) => {
                    let result = match (frame.msg_type, conns.agent_of.get(&id)) {
                        (MsgType::Register, Some(_)) => Err(BusError::Payload("connection already registered".into())),
                        (MsgType::Register, None) => {
                            let agent = serde_json::from_str::<super::AgentProfile>(&frame.payload)
                                .map(|p| p.agent_id)
                                .unwrap_or_default();
                            broker.handle_frame(&agent, &frame).inspect(|_| {
                                conns.agent_of.insert(id, agent);
                            })
                        }
                        (_, None) => Err(BusError::Payload("register before sending".into())),
                        (_, Some(agent)) => {
                            let agent = agent.clone();
                            broker.handle_frame(&agent, &frame)
                        }
                    };
                    if let Err(e) = result {
                        warn!(connection = id, error = %e, "rejected frame");
                        if let Some(w) = conns.writers.get(&id) {
                            let _ = w.send(error_frame(&e.to_string()));
                        }
                    }
                    for envelope in broker.drain_outbox() {
                        conns.send_to_agent(&envelope.to, envelope.frame);
                    }
                }
            }
        }
    }
}
