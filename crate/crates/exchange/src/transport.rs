//! Reliable ordered message channels, with fault injection for tests.

use std::io::{ErrorKind, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::wire::{MessageType, WireMessage};
use crate::{ExchangeError, Result};

pub trait Transport: Send {
    fn send(&mut self, msg: &WireMessage) -> Result<()>;

    /// `Err(Timeout)` when nothing arrives in time, `Err(Closed)` when the
    /// peer is gone.
    fn recv(&mut self) -> Result<WireMessage>;

    /// Tells the peer that a message was lost in transit. Transports that
    /// rely on wall-clock timeouts ignore this.
    fn signal_lost(&mut self) -> Result<()> {
        Ok(())
    }

    /// Total framed bytes sent so far.
    fn bytes_sent(&self) -> u64;
}

/// Framed messages over a byte stream.
pub struct StreamTransport<S> {
    stream: S,
    sent: u64,
}

impl<S: Read + Write + Send> StreamTransport<S> {
    pub fn new(stream: S) -> Self {
        Self { stream, sent: 0 }
    }
}

impl StreamTransport<TcpStream> {
    pub fn tcp(stream: TcpStream, timeout: Duration) -> Result<Self> {
        stream.set_read_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        Ok(Self::new(stream))
    }
}

impl<S: Read + Write + Send> Transport for StreamTransport<S> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        msg.write_to(&mut self.stream)?;
        self.sent += msg.encoded_len() as u64;
        Ok(())
    }

    fn recv(&mut self) -> Result<WireMessage> {
        match WireMessage::read_from(&mut self.stream) {
            Err(ExchangeError::Io(e)) => Err(match e.kind() {
                ErrorKind::WouldBlock | ErrorKind::TimedOut => ExchangeError::Timeout,
                ErrorKind::UnexpectedEof | ErrorKind::ConnectionReset | ErrorKind::BrokenPipe => ExchangeError::Closed,
                _ => ExchangeError::Io(e),
            }),
            other => other,
        }
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }
}

enum Delivery {
    Frame(Vec<u8>),
    Lost,
}

/// In-process pipe. Frames travel as bytes so tampering acts on the
/// encoding; a lost message surfaces at the receiver as an immediate
/// timeout instead of a wall-clock wait.
pub struct MemoryTransport {
    tx: Sender<Delivery>,
    rx: Receiver<Delivery>,
    idle: Duration,
    sent: u64,
}

/// Connected pair of in-process transports.
pub fn memory_pair(idle: Duration) -> (MemoryTransport, MemoryTransport) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (
        MemoryTransport { tx: a_tx, rx: a_rx, idle, sent: 0 },
        MemoryTransport { tx: b_tx, rx: b_rx, idle, sent: 0 },
    )
}

impl Transport for MemoryTransport {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        let frame = msg.encode();
        self.sent += frame.len() as u64;
        self.tx.send(Delivery::Frame(frame)).map_err(|_| ExchangeError::Closed)
    }

    fn recv(&mut self) -> Result<WireMessage> {
        match self.rx.recv_timeout(self.idle) {
            Ok(Delivery::Frame(f)) => WireMessage::decode(&f),
            Ok(Delivery::Lost) | Err(RecvTimeoutError::Timeout) => Err(ExchangeError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(ExchangeError::Closed),
        }
    }

    fn signal_lost(&mut self) -> Result<()> {
        self.tx.send(Delivery::Lost).map_err(|_| ExchangeError::Closed)
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    Drop,
    /// Flip one bit of the body.
    Tamper,
}

/// Applies `fault` to the first outgoing message of type `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaultPlan {
    pub target: MessageType,
    pub fault: Fault,
    pub seed: u64,
}

pub struct FaultyTransport<T> {
    inner: T,
    plan: Option<FaultPlan>,
}

impl<T: Transport> FaultyTransport<T> {
    pub fn new(inner: T, plan: Option<FaultPlan>) -> Self {
        Self { inner, plan }
    }
}

impl<T: Transport> Transport for FaultyTransport<T> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        match self.plan {
            Some(p) if p.target == msg.kind => {
                self.plan = None;
                match p.fault {
                    Fault::Drop => self.inner.signal_lost(),
                    Fault::Tamper => {
                        let mut m = msg.clone();
                        if !m.body.is_empty() {
                            let mut rng = ChaCha20Rng::seed_from_u64(p.seed);
                            let i = rng.gen_range(0..m.body.len());
                            m.body[i] ^= 1 << rng.gen_range(0..8);
                        }
                        self.inner.send(&m)
                    }
                }
            }
            _ => self.inner.send(msg),
        }
    }

    fn recv(&mut self) -> Result<WireMessage> {
        self.inner.recv()
    }

    fn signal_lost(&mut self) -> Result<()> {
        self.inner.signal_lost()
    }

    fn bytes_sent(&self) -> u64 {
        self.inner.bytes_sent()
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        (**self).send(msg)
    }

    fn recv(&mut self) -> Result<WireMessage> {
        (**self).recv()
    }

    fn signal_lost(&mut self) -> Result<()> {
        (**self).signal_lost()
    }

    fn bytes_sent(&self) -> u64 {
        (**self).bytes_sent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::KeyReveal;
    use std::net::TcpListener;

    #[test]
    fn memory_pipe_and_faults() {
        let (a, mut b) = memory_pair(Duration::from_millis(200));
        let plan = FaultPlan { target: MessageType::KeyReveal, fault: Fault::Drop, seed: 0 };
        let mut a = FaultyTransport::new(a, Some(plan));
        let msg = KeyReveal { key: [3; 32] }.to_message();
        a.send(&msg).unwrap();
        assert!(matches!(b.recv(), Err(ExchangeError::Timeout)));
        a.send(&msg).unwrap();
        assert_eq!(b.recv().unwrap(), msg);
        assert_eq!(a.bytes_sent(), msg.encoded_len() as u64);

        let (c, mut d) = memory_pair(Duration::from_millis(200));
        let plan = FaultPlan { target: MessageType::KeyReveal, fault: Fault::Tamper, seed: 1 };
        let mut c = FaultyTransport::new(c, Some(plan));
        c.send(&msg).unwrap();
        let got = d.recv().unwrap();
        assert_eq!(got.body.iter().zip(&msg.body).filter(|(x, y)| x != y).count(), 1);
        drop(c);
        assert!(matches!(d.recv(), Err(ExchangeError::Closed)));
    }

    #[test]
    fn tcp_framing() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let h = std::thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            let mut t = StreamTransport::tcp(s, Duration::from_secs(5)).unwrap();
            let m = t.recv().unwrap();
            t.send(&m).unwrap();
        });
        let mut t = StreamTransport::tcp(TcpStream::connect(addr).unwrap(), Duration::from_secs(5)).unwrap();
        let msg = KeyReveal { key: [9; 32] }.to_message();
        t.send(&msg).unwrap();
        assert_eq!(t.recv().unwrap(), msg);
        h.join().unwrap();
        assert!(matches!(t.recv(), Err(ExchangeError::Closed)));
    }
}
